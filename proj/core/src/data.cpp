#include "codistill/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "codistill/error.hpp"
#include "codistill/rng.hpp"

namespace codistill {

Shape Dataset::sample_shape() const {
    const Shape& s = features.shape();
    if (s.empty()) throw ShapeError("dataset features must be batched");
    return Shape(s.begin() + 1, s.end());
}

Dataset gen_gaussian_blobs(std::size_t classes,
                           std::size_t per_class,
                           std::size_t dim,
                           double separation,
                           std::uint64_t seed) {
    if (classes < 2) throw ValueError("gen_gaussian_blobs: need at least 2 classes");
    if (per_class == 0) throw ValueError("gen_gaussian_blobs: per_class must be positive");
    if (dim == 0) throw ValueError("gen_gaussian_blobs: dim must be positive");
    if (separation < 0.0) throw ValueError("gen_gaussian_blobs: separation must be nonnegative");

    std::size_t n = classes * per_class;
    std::vector<double> features(n * dim);
    std::vector<int> labels(n);
    Rng rng(derive_seed(seed, "gaussian_blobs"));

    for (std::size_t c = 0; c < classes; ++c) {
        std::vector<double> center(dim, 0.0);
        if (dim >= 2) {
            double angle = 2.0 * std::numbers::pi * static_cast<double>(c) /
                           static_cast<double>(classes);
            center[0] = separation * std::cos(angle);
            center[1] = separation * std::sin(angle);
        } else {
            center[0] = (c % 2 == 0) ? separation : -separation;
        }
        for (std::size_t i = 0; i < per_class; ++i) {
            std::size_t row = c * per_class + i;
            labels[row] = static_cast<int>(c);
            for (std::size_t d = 0; d < dim; ++d) {
                features[row * dim + d] = center[d] + rng.normal();
            }
        }
    }
    Dataset ds;
    ds.features = Tensor::from_data(Shape{n, dim}, std::move(features));
    ds.labels = LabelBatch::make(std::move(labels), classes);
    ds.name = "gaussian_blobs";
    ds.class_count = classes;
    return ds;
}

Dataset gen_synthetic_images(std::size_t classes,
                             std::size_t per_class,
                             std::size_t side,
                             std::uint64_t seed) {
    if (classes < 2) throw ValueError("gen_synthetic_images: need at least 2 classes");
    if (per_class == 0) throw ValueError("gen_synthetic_images: per_class must be positive");
    if (side < 8) throw ValueError("gen_synthetic_images: side must be at least 8");

    constexpr double kNoiseSigma = 0.25;
    std::size_t n = classes * per_class;
    std::size_t pixels = side * side;
    std::vector<double> features(n * pixels);
    std::vector<int> labels(n);
    Rng rng(derive_seed(seed, "synthetic_images"));

    // Class pattern: cos(w u) cos(w v) around the image center; even in u, so
    // a horizontal flip maps the noise-free pattern onto itself exactly.
    double half = (static_cast<double>(side) - 1.0) / 2.0;
    for (std::size_t c = 0; c < classes; ++c) {
        double freq = 2.0 * std::numbers::pi * static_cast<double>(c + 1) /
                      static_cast<double>(side);
        for (std::size_t i = 0; i < per_class; ++i) {
            std::size_t row = c * per_class + i;
            labels[row] = static_cast<int>(c);
            double* img = &features[row * pixels];
            for (std::size_t y = 0; y < side; ++y) {
                double v = static_cast<double>(y) - half;
                for (std::size_t x = 0; x < side; ++x) {
                    double u = static_cast<double>(x) - half;
                    img[y * side + x] =
                        std::cos(freq * u) * std::cos(freq * v) + rng.normal(0.0, kNoiseSigma);
                }
            }
        }
    }
    Dataset ds;
    ds.features = Tensor::from_data(Shape{n, 1, side, side}, std::move(features));
    ds.labels = LabelBatch::make(std::move(labels), classes);
    ds.name = "synthetic_images";
    ds.class_count = classes;
    return ds;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) {
        // trim whitespace
        std::size_t b = cell.find_first_not_of(" \t\r");
        std::size_t e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

double parse_number(const std::string& cell, std::size_t line_no, const std::string& col) {
    try {
        std::size_t pos = 0;
        double v = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": cell '" + cell + "' in column '" +
                         col + "' is not numeric");
    }
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path,
                 const std::string& label_column,
                 std::vector<std::string>* warnings) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open csv file: " + path.string());

    std::string line;
    if (!std::getline(is, line)) throw ParseError("csv file is empty: " + path.string());
    std::vector<std::string> header = split_csv_line(line);
    std::size_t label_idx = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == label_column) label_idx = i;
    }
    if (label_idx == header.size()) {
        throw ParseError("label column '" + label_column + "' not found in header");
    }

    std::vector<double> features;
    std::vector<int> labels;
    std::size_t feature_cols = header.size() - 1;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " cells, got " +
                             std::to_string(cells.size()));
        }
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i == label_idx) {
                double v = parse_number(cells[i], line_no, header[i]);
                double rounded = std::nearbyint(v);
                if (v != rounded || rounded < 0) {
                    throw ParseError("line " + std::to_string(line_no) + ": label '" + cells[i] +
                                     "' is not a nonnegative integer");
                }
                labels.push_back(static_cast<int>(rounded));
            } else {
                features.push_back(parse_number(cells[i], line_no, header[i]));
            }
        }
    }
    if (labels.empty()) throw ParseError("csv file has no data rows: " + path.string());

    int max_label = *std::max_element(labels.begin(), labels.end());
    std::size_t classes = static_cast<std::size_t>(max_label) + 1;
    std::vector<std::size_t> counts(classes, 0);
    for (int y : labels) counts[static_cast<std::size_t>(y)]++;
    for (std::size_t c = 0; c < classes; ++c) {
        if (counts[c] == 0 && warnings) {
            warnings->push_back("class " + std::to_string(c) +
                                " has no samples (class count inferred as max label + 1)");
        }
    }

    Dataset ds;
    std::size_t n = labels.size();
    ds.features = Tensor::from_data(Shape{n, feature_cols}, std::move(features));
    ds.labels = LabelBatch::make(std::move(labels), classes);
    ds.name = path.stem().string();
    ds.class_count = classes;
    return ds;
}

void save_csv(const Dataset& ds, const std::filesystem::path& path,
              const std::string& label_column) {
    if (ds.features.ndim() != 2) {
        throw ShapeError("save_csv supports flat [N, F] feature matrices only");
    }
    std::ofstream os(path);
    if (!os) throw IoError("cannot open csv file for writing: " + path.string());
    std::size_t cols = ds.features.dim(1);
    for (std::size_t c = 0; c < cols; ++c) os << 'f' << c << ',';
    os << label_column << '\n';
    auto v = ds.features.values();
    os.precision(17);
    for (std::size_t r = 0; r < ds.size(); ++r) {
        for (std::size_t c = 0; c < cols; ++c) os << v[r * cols + c] << ',';
        os << ds.labels.labels[r] << '\n';
    }
}

Split split_80_20(const Dataset& ds, std::uint64_t seed) {
    std::size_t n = ds.size();
    if (n < 5) throw ValueError("split_80_20: need at least 5 samples, got " + std::to_string(n));

    std::vector<std::vector<std::size_t>> by_class(ds.class_count);
    for (std::size_t i = 0; i < n; ++i) {
        by_class[static_cast<std::size_t>(ds.labels.labels[i])].push_back(i);
    }

    Rng rng(derive_seed(seed, "split_80_20"));
    for (auto& idx : by_class) rng.shuffle(idx);

    // Largest-remainder apportionment of the train quota across classes keeps
    // the overall count within one sample of 0.8 N while staying stratified.
    std::size_t total_train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(n)));
    std::vector<std::size_t> base(ds.class_count);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < ds.class_count; ++c) {
        double target = 0.8 * static_cast<double>(by_class[c].size());
        base[c] = static_cast<std::size_t>(target);
        assigned += base[c];
        remainders.push_back({target - static_cast<double>(base[c]), c});
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; i < remainders.size() && assigned < total_train; ++i) {
        std::size_t c = remainders[i].second;
        if (base[c] < by_class[c].size()) {
            ++base[c];
            ++assigned;
        }
    }
    // Nonempty classes keep at least one training sample.
    for (std::size_t c = 0; c < ds.class_count; ++c) {
        if (!by_class[c].empty() && base[c] == 0) base[c] = 1;
    }

    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t c = 0; c < ds.class_count; ++c) {
        for (std::size_t i = 0; i < by_class[c].size(); ++i) {
            (i < base[c] ? train_idx : test_idx).push_back(by_class[c][i]);
        }
    }

    auto subset = [&](const std::vector<std::size_t>& idx, const std::string& suffix) {
        Dataset out;
        out.features = take_rows(ds.features, idx);
        std::vector<int> lab(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) lab[i] = ds.labels.labels[idx[i]];
        out.labels = LabelBatch::make(std::move(lab), ds.class_count);
        out.name = ds.name + suffix;
        out.class_count = ds.class_count;
        return out;
    };

    Split split;
    split.train = subset(train_idx, "/train");
    split.test = subset(test_idx, "/test");
    split.ratio = 0.8;
    split.seed = seed;
    split.train_indices = std::move(train_idx);
    split.test_indices = std::move(test_idx);
    return split;
}

}  // namespace codistill
