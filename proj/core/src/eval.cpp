#include "codistill/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "codistill/error.hpp"

namespace codistill {

Tensor ensemble_probs(const std::vector<ProbBatch>& students, EnsembleRule rule) {
    if (students.empty()) throw ValueError("ensemble_probs: no student predictions");
    std::size_t n = students[0].batch(), c = students[0].classes();
    for (const ProbBatch& s : students) {
        if (s.probs.shape() != students[0].probs.shape()) {
            throw ShapeError("ensemble_probs: student prediction shapes differ");
        }
    }
    std::vector<double> out(n * c);
    if (rule == EnsembleRule::ElementwiseMax) {
        auto first = students[0].probs.values();
        std::copy(first.begin(), first.end(), out.begin());
        for (std::size_t k = 1; k < students.size(); ++k) {
            auto v = students[k].probs.values();
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], v[i]);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best_k = 0;
            double best_peak = -1.0;
            for (std::size_t k = 0; k < students.size(); ++k) {
                auto v = students[k].probs.values();
                double peak = *std::max_element(v.begin() + static_cast<std::ptrdiff_t>(i * c),
                                                v.begin() + static_cast<std::ptrdiff_t>((i + 1) * c));
                if (peak > best_peak) {
                    best_peak = peak;
                    best_k = k;
                }
            }
            auto v = students[best_k].probs.values();
            std::copy(v.begin() + static_cast<std::ptrdiff_t>(i * c),
                      v.begin() + static_cast<std::ptrdiff_t>((i + 1) * c),
                      out.begin() + static_cast<std::ptrdiff_t>(i * c));
        }
    }
    return Tensor::from_data(Shape{n, c}, std::move(out));
}

LabelBatch ensemble_predict(const Tensor& scores) {
    if (scores.ndim() != 2) throw ShapeError("ensemble_predict: scores must be [N, C]");
    std::size_t n = scores.dim(0), c = scores.dim(1);
    auto v = scores.values();
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < c; ++j) {
            if (v[i * c + j] > v[i * c + best]) best = j;  // strict: ties keep lowest index
        }
        labels[i] = static_cast<int>(best);
    }
    return LabelBatch::make(std::move(labels), c);
}

double accuracy(const LabelBatch& pred, const LabelBatch& truth) {
    if (pred.size() != truth.size()) {
        throw ShapeError("accuracy: prediction and truth lengths differ");
    }
    if (pred.size() == 0) throw ValueError("accuracy: empty batch");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred.labels[i] == truth.labels[i]) ++correct;
    }
    return 100.0 * static_cast<double>(correct) / static_cast<double>(pred.size());
}

namespace {

double sample_mean(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double sample_var(const std::vector<double>& x, double mean) {
    double s = 0.0;
    for (double v : x) s += (v - mean) * (v - mean);
    return s / static_cast<double>(x.size() - 1);
}

// Regularized incomplete beta I_x(a, b) by the continued-fraction expansion
// (modified Lentz). Accurate to ~1e-10 over the range needed by the t CDF.
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 200;
    constexpr double kEps = 3e-12;
    constexpr double kFpMin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                      a * std::log(x) + b * std::log(1.0 - x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * betacf(a, b, x) / a;
    }
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

// Two-sided p-value of Student's t with dof degrees of freedom.
double t_two_sided_p(double t, double dof) {
    double x = dof / (dof + t * t);
    return incomplete_beta(dof / 2.0, 0.5, x);
}

}  // namespace

WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2) {
        throw ValueError("welch_t_test: each sample needs at least 2 observations");
    }
    double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double ma = sample_mean(a), mb = sample_mean(b);
    double va = sample_var(a, ma), vb = sample_var(b, mb);
    double sea = va / na, seb = vb / nb;
    double denom = std::sqrt(sea + seb);

    WelchResult r;
    if (denom == 0.0) {
        r.degenerate = true;
        if (ma == mb) {
            r.t = 0.0;
            r.p = 1.0;
            r.significant = false;
        } else {
            r.t = ma > mb ? std::numeric_limits<double>::infinity()
                          : -std::numeric_limits<double>::infinity();
            r.p = 0.0;
            r.significant = true;
        }
        return r;
    }
    r.t = (ma - mb) / denom;
    r.dof = (sea + seb) * (sea + seb) /
            (sea * sea / (na - 1.0) + seb * seb / (nb - 1.0));
    r.p = t_two_sided_p(r.t, r.dof);
    r.significant = r.p < 0.05;
    return r;
}

AggregateReport aggregate(const std::vector<RunReport>& reports,
                          const std::string& baseline_mode,
                          const std::string& baseline_model) {
    if (reports.empty()) throw ValueError("aggregate: no reports");
    const std::string& fp = reports[0].fingerprint;
    for (const RunReport& r : reports) {
        if (r.fingerprint != fp) {
            throw ValueError("aggregate: mixed config fingerprints (" + fp + " vs " +
                             r.fingerprint + ")");
        }
    }

    // (mode, model) -> accuracies over seeds, in first-seen order.
    std::vector<std::pair<std::string, std::string>> order;
    std::map<std::pair<std::string, std::string>, std::vector<double>> series;
    auto push = [&](const std::string& mode, const std::string& model, double acc) {
        auto key = std::make_pair(mode, model);
        if (!series.count(key)) order.push_back(key);
        series[key].push_back(acc);
    };
    for (const RunReport& r : reports) {
        for (const auto& [model, acc] : r.model_accuracy) push(r.mode, model, acc);
        push(r.mode, "ensemble", r.ensemble_accuracy);
    }

    auto baseline_key = std::make_pair(baseline_mode, baseline_model);
    auto it = series.find(baseline_key);
    if (it == series.end()) {
        throw ValueError("aggregate: baseline series " + baseline_mode + "/" + baseline_model +
                         " not present in reports");
    }
    const std::vector<double>& baseline = it->second;

    AggregateReport out;
    out.baseline_mode = baseline_mode;
    out.baseline_model = baseline_model;
    for (const auto& key : order) {
        const std::vector<double>& acc = series[key];
        if (acc.size() < 2) {
            throw ValueError("aggregate: series " + key.first + "/" + key.second +
                             " has fewer than 2 seeds");
        }
        SeriesStat st;
        st.mode = key.first;
        st.model = key.second;
        st.count = acc.size();
        st.mean = sample_mean(acc);
        st.stddev = std::sqrt(sample_var(acc, st.mean));
        if (key != baseline_key) {
            WelchResult w = welch_t_test(acc, baseline);
            st.significant_vs_baseline = w.significant && st.mean > sample_mean(baseline);
            st.welch_degenerate = w.degenerate;
        }
        out.series.push_back(st);
    }
    return out;
}

}  // namespace codistill
