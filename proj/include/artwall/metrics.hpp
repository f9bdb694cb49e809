#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "artwall/io_util.hpp"
#include "artwall/raster.hpp"

namespace artwall {

// SSIM(x,y) = (2 mu_x mu_y + c1)(2 cov + c2) /
//             ((mu_x^2 + mu_y^2 + c1)(var_x + var_y + c2)),
// c1 = (k1 L)^2, c2 = (k2 L)^2. Global mode applies the formula once with
// whole-image statistics; windowed mode averages it over Gaussian-weighted
// sliding windows (the convention of the SSIM literature).
struct SsimParams {
    double k1 = 0.01;
    double k2 = 0.03;
    double L = 1.0;  // dynamic range of the normalized maps
    enum class Mode { Global, Windowed } mode = Mode::Windowed;
    int window = 11;
    double sigma = 1.5;

    double c1() const { return (k1 * L) * (k1 * L); }
    double c2() const { return (k2 * L) * (k2 * L); }
    bool valid() const { return k1 > 0 && k2 > 0 && L > 0 && window >= 3 && window % 2 == 1; }
};

namespace detail_metrics {

template <typename T>
double ssim_global(const std::vector<T>& x, const std::vector<T>& y, const SsimParams& p) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double vx = 0, vy = 0, cxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        vx += dx * dx;
        vy += dy * dy;
        cxy += dx * dy;
    }
    vx /= n;
    vy /= n;
    cxy /= n;
    return (2 * mx * my + p.c1()) * (2 * cxy + p.c2()) /
           ((mx * mx + my * my + p.c1()) * (vx + vy + p.c2()));
}

inline std::vector<double> gaussian_kernel(int window, double sigma) {
    std::vector<double> k(static_cast<size_t>(window) * window);
    const int r = window / 2;
    double sum = 0;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
            const double v = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
            k[static_cast<size_t>(dy + r) * window + (dx + r)] = v;
            sum += v;
        }
    for (auto& v : k) v /= sum;
    return k;
}

template <typename T>
double ssim_windowed(const std::vector<T>& x, const std::vector<T>& y, int w, int h,
                     const SsimParams& p) {
    const int r = p.window / 2;
    if (w < p.window || h < p.window) return ssim_global(x, y, p);
    const std::vector<double> kern = gaussian_kernel(p.window, p.sigma);
    double acc = 0;
    size_t count = 0;
    for (int cy = r; cy < h - r; ++cy) {
        for (int cx = r; cx < w - r; ++cx) {
            double mx = 0, my = 0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const double kv = kern[static_cast<size_t>(dy + r) * p.window + (dx + r)];
                    mx += kv * x[static_cast<size_t>(cy + dy) * w + (cx + dx)];
                    my += kv * y[static_cast<size_t>(cy + dy) * w + (cx + dx)];
                }
            double vx = 0, vy = 0, cxy = 0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const double kv = kern[static_cast<size_t>(dy + r) * p.window + (dx + r)];
                    const double ex = x[static_cast<size_t>(cy + dy) * w + (cx + dx)] - mx;
                    const double ey = y[static_cast<size_t>(cy + dy) * w + (cx + dx)] - my;
                    vx += kv * ex * ex;
                    vy += kv * ey * ey;
                    cxy += kv * ex * ey;
                }
            acc += (2 * mx * my + p.c1()) * (2 * cxy + p.c2()) /
                   ((mx * mx + my * my + p.c1()) * (vx + vy + p.c2()));
            ++count;
        }
    }
    return acc / static_cast<double>(count);
}

} // namespace detail_metrics

template <typename T>
double ssim(const std::vector<T>& x, const std::vector<T>& y, int width, int height,
            const SsimParams& p = {}) {
    if (x.size() != y.size() || x.size() != static_cast<size_t>(width) * height)
        throw std::invalid_argument("ssim: shape mismatch");
    if (!p.valid()) throw std::invalid_argument("ssim: bad parameters");
    return p.mode == SsimParams::Mode::Global ? detail_metrics::ssim_global(x, y, p)
                                              : detail_metrics::ssim_windowed(x, y, width, height, p);
}

template <typename T>
double mse_metric(const std::vector<T>& x, const std::vector<T>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("mse: shape mismatch");
    double acc = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double d = static_cast<double>(x[i]) - y[i];
        acc += d * d;
    }
    return acc / static_cast<double>(x.size());
}

// 100 * mean absolute difference of [0,1]-normalized maps.
template <typename T>
double mean_error_pct(const std::vector<T>& x, const std::vector<T>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("mean_error_pct: shape mismatch");
    double acc = 0;
    for (size_t i = 0; i < x.size(); ++i) acc += std::abs(static_cast<double>(x[i]) - y[i]);
    return 100.0 * acc / static_cast<double>(x.size());
}

struct SampleEval {
    std::string sample_id;
    double mse = 0, ssim = 0, mean_error_pct = 0;
};

struct Aggregate {
    double min = 0, max = 0, mean = 0;
};

struct EvalReport {
    std::string model_id;
    std::string target;  // stress | strain
    std::vector<SampleEval> rows;
    Aggregate mse, ssim;

    void recompute_aggregates() {
        auto agg = [&](auto get) {
            Aggregate a;
            a.min = std::numeric_limits<double>::max();
            a.max = std::numeric_limits<double>::lowest();
            double sum = 0;
            for (const auto& r : rows) {
                const double v = get(r);
                a.min = std::min(a.min, v);
                a.max = std::max(a.max, v);
                sum += v;
            }
            a.mean = rows.empty() ? 0.0 : sum / static_cast<double>(rows.size());
            return a;
        };
        mse = agg([](const SampleEval& r) { return r.mse; });
        ssim = agg([](const SampleEval& r) { return r.ssim; });
    }
};

inline void to_json(json& j, const SampleEval& r) {
    j = json{{"sample_id", r.sample_id},
             {"mse", r.mse},
             {"ssim", r.ssim},
             {"mean_error_pct", r.mean_error_pct}};
}
inline void from_json(const json& j, SampleEval& r) {
    j.at("sample_id").get_to(r.sample_id);
    j.at("mse").get_to(r.mse);
    j.at("ssim").get_to(r.ssim);
    j.at("mean_error_pct").get_to(r.mean_error_pct);
}
inline void to_json(json& j, const Aggregate& a) {
    j = json{{"min", a.min}, {"max", a.max}, {"mean", a.mean}};
}
inline void from_json(const json& j, Aggregate& a) {
    j.at("min").get_to(a.min);
    j.at("max").get_to(a.max);
    j.at("mean").get_to(a.mean);
}
inline void to_json(json& j, const EvalReport& r) {
    j = json{{"model_id", r.model_id},
             {"target", r.target},
             {"rows", r.rows},
             {"aggregates", {{"mse", r.mse}, {"ssim", r.ssim}}}};
}
inline void from_json(const json& j, EvalReport& r) {
    j.at("model_id").get_to(r.model_id);
    j.at("target").get_to(r.target);
    j.at("rows").get_to(r.rows);
    j.at("aggregates").at("mse").get_to(r.mse);
    j.at("aggregates").at("ssim").get_to(r.ssim);
}

// Run a predictor over samples and collect per-sample metrics plus
// min/max/mean aggregates (the report layout of the evaluation tables).
inline EvalReport evaluate_samples(
    const std::function<std::vector<float>(const FieldSample&)>& predictor,
    const std::vector<const FieldSample*>& samples, bool stress_target, const SsimParams& params,
    const std::string& model_id) {
    EvalReport report;
    report.model_id = model_id;
    report.target = stress_target ? "stress" : "strain";
    for (const FieldSample* s : samples) {
        const std::vector<float> pred = predictor(*s);
        const std::vector<float>& truth = stress_target ? s->stress : s->strain;
        SampleEval row;
        row.sample_id = s->sample_id;
        row.mse = mse_metric(pred, truth);
        row.ssim = ssim(pred, truth, s->size, s->size, params);
        row.mean_error_pct = mean_error_pct(pred, truth);
        report.rows.push_back(row);
    }
    report.recompute_aggregates();
    return report;
}

inline void write_report_csv(const std::filesystem::path& path, const EvalReport& r) {
    std::ostringstream os;
    os << "sample_id,mse,ssim,mean_error_pct\n";
    for (const auto& row : r.rows)
        os << row.sample_id << ',' << row.mse << ',' << row.ssim << ',' << row.mean_error_pct
           << '\n';
    const std::string text = os.str();
    write_file_bytes(path, text.data(), text.size());
}

} // namespace artwall
