#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "artwall/rng.hpp"

namespace artwall {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 v) { return std::sqrt(dot(v, v)); }

inline constexpr double kPi = 3.14159265358979323846;
inline double deg_to_rad(double d) { return d * (kPi / 180.0); }

enum class TissueLabel : std::uint8_t {
    Exterior = 0,
    Artery = 1,
    Fibrous = 2,
    Calcium = 3,
    Lumen = 4,
};

inline const char* tissue_name(TissueLabel t) {
    switch (t) {
        case TissueLabel::Exterior: return "exterior";
        case TissueLabel::Artery: return "artery";
        case TissueLabel::Fibrous: return "fibrous";
        case TissueLabel::Calcium: return "calcium";
        case TissueLabel::Lumen: return "lumen";
    }
    return "?";
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double v) const { return v >= lo && v <= hi; }
    bool valid() const { return lo <= hi; }
};

// Sampling ranges for the parametric cross-section. Defaults reproduce the
// reference feature table: R=2, r=1.75, Lr=0.75, Lx,Ly in [-0.25,0.25],
// Cn in {1,2}, Cr in [1,1.25], CR in [1.3,1.5], Ca in [0,180] degrees.
struct GeometryRanges {
    double artery_outer_radius_mm = 2.0;   // R
    double artery_inner_radius_mm = 1.75;  // r
    double lumen_radius_mm = 0.75;         // Lr
    Interval lumen_offset_x_mm{-0.25, 0.25};
    Interval lumen_offset_y_mm{-0.25, 0.25};
    std::vector<int> calcification_count{1, 2};  // Cn
    Interval calc_inner_radius_mm{1.0, 1.25};    // Cr
    Interval calc_outer_radius_mm{1.3, 1.5};     // CR
    Interval calc_angle_deg{0.0, 180.0};         // Ca

    bool valid() const {
        return artery_outer_radius_mm > 0 && artery_inner_radius_mm > 0 &&
               artery_inner_radius_mm < artery_outer_radius_mm && lumen_radius_mm > 0 &&
               lumen_offset_x_mm.valid() && lumen_offset_y_mm.valid() &&
               !calcification_count.empty() && calc_inner_radius_mm.valid() &&
               calc_outer_radius_mm.valid() && calc_angle_deg.valid() &&
               calc_inner_radius_mm.lo < calc_outer_radius_mm.lo;
    }
};

// Spans narrower than this produce sliver outlines that collapse under
// rasterization; the sampler redraws instead.
inline constexpr double kMinCalcSpanDeg = 5.0;
// Required clearance between a calcification outline and the lumen disk.
inline constexpr double kCalcClearanceMm = 0.01;
// Minimum angular gap between the spans of two calcifications.
inline constexpr double kCalcAngularGapDeg = 2.0;

// Closed interpolating spline through 20 control points: 10 on the inner
// arc of the calcification followed by 10 on the outer arc, forming one
// loop. Evaluation uses the centripetal Catmull-Rom recurrence, which does
// not cusp or self-intersect inside a segment even with the uneven spacing
// at the radial jumps.
struct ClosedSpline {
    std::vector<Vec2> control_points;
    std::string kind = "catmull-rom-centripetal";

    size_t segment_count() const { return control_points.size(); }

    // u in [0,1], wraps; eval(0) == eval(1).
    Vec2 eval(double u) const {
        const size_t n = control_points.size();
        u -= std::floor(u);
        const double g = u * static_cast<double>(n);
        size_t seg = static_cast<size_t>(g);
        if (seg >= n) seg = n - 1;
        return eval_segment(seg, g - static_cast<double>(seg));
    }

    // Dense polyline with exactly `segments` vertices, distributed over the
    // spline segments.
    std::vector<Vec2> polyline(int segments = 512) const {
        const size_t n = control_points.size();
        std::vector<Vec2> pts;
        pts.reserve(static_cast<size_t>(segments));
        for (size_t i = 0; i < n; ++i) {
            const size_t k0 = (static_cast<size_t>(segments) * i) / n;
            const size_t k1 = (static_cast<size_t>(segments) * (i + 1)) / n;
            const size_t m = k1 - k0;
            for (size_t k = 0; k < m; ++k)
                pts.push_back(eval_segment(i, static_cast<double>(k) / static_cast<double>(m)));
        }
        return pts;
    }

    Vec2 eval_segment(size_t seg, double s) const {
        const size_t n = control_points.size();
        const Vec2 p0 = control_points[(seg + n - 1) % n];
        const Vec2 p1 = control_points[seg];
        const Vec2 p2 = control_points[(seg + 1) % n];
        const Vec2 p3 = control_points[(seg + 2) % n];

        auto knot = [](Vec2 a, Vec2 b) {
            const double d = std::sqrt(norm(b - a));
            return d > 1e-12 ? d : 1e-12;
        };
        const double t0 = 0.0;
        const double t1 = t0 + knot(p0, p1);
        const double t2 = t1 + knot(p1, p2);
        const double t3 = t2 + knot(p2, p3);
        const double t = t1 + s * (t2 - t1);

        // Barry-Goldman pyramid
        const Vec2 a1 = ((t1 - t) / (t1 - t0)) * p0 + ((t - t0) / (t1 - t0)) * p1;
        const Vec2 a2 = ((t2 - t) / (t2 - t1)) * p1 + ((t - t1) / (t2 - t1)) * p2;
        const Vec2 a3 = ((t3 - t) / (t3 - t2)) * p2 + ((t - t2) / (t3 - t2)) * p3;
        const Vec2 b1 = ((t2 - t) / (t2 - t0)) * a1 + ((t - t0) / (t2 - t0)) * a2;
        const Vec2 b2 = ((t3 - t) / (t3 - t1)) * a2 + ((t - t1) / (t3 - t1)) * a3;
        return ((t2 - t) / (t2 - t1)) * b1 + ((t - t1) / (t2 - t1)) * b2;
    }
};

inline double polygon_signed_area(const std::vector<Vec2>& pts) {
    double a = 0.0;
    const size_t n = pts.size();
    for (size_t i = 0; i < n; ++i) {
        const Vec2& p = pts[i];
        const Vec2& q = pts[(i + 1) % n];
        a += p.x * q.y - q.x * p.y;
    }
    return 0.5 * a;
}

// Even-odd rule on a polyline.
inline bool point_in_polygon(const std::vector<Vec2>& poly, double x, double y) {
    bool inside = false;
    const size_t n = poly.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[j];
        if ((a.y > y) != (b.y > y)) {
            const double xint = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (x < xint) inside = !inside;
        }
    }
    return inside;
}

struct CalcificationSpec {
    double inner_radius_mm = 0.0;       // Cr
    double outer_radius_mm = 0.0;       // CR
    double angular_span_deg = 0.0;      // Ca
    double angular_position_deg = 0.0;  // start angle of the span, from +x axis
    ClosedSpline outline;
};

// Control points: 10 at equal angular intervals on radius Cr over
// [theta0, theta0+Ca], then 10 on radius CR in reverse order.
inline ClosedSpline build_calcification_outline(double cr, double cR, double ca_deg,
                                                double theta0_deg) {
    if (!(cr < cR)) throw std::invalid_argument("calcification inner radius must be < outer");
    if (ca_deg < 0.0 || ca_deg > 180.0)
        throw std::invalid_argument("calcification span must lie in [0, 180] degrees");
    if (ca_deg < kMinCalcSpanDeg)
        throw std::invalid_argument("degenerate calcification span");

    ClosedSpline spline;
    spline.control_points.reserve(20);
    const double a0 = deg_to_rad(theta0_deg);
    const double da = deg_to_rad(ca_deg) / 9.0;
    for (int k = 0; k < 10; ++k) {
        const double a = a0 + da * k;
        spline.control_points.push_back({cr * std::cos(a), cr * std::sin(a)});
    }
    for (int k = 9; k >= 0; --k) {
        const double a = a0 + da * k;
        spline.control_points.push_back({cR * std::cos(a), cR * std::sin(a)});
    }
    return spline;
}

struct GeometrySpec {
    std::uint64_t seed = 0;
    double R = 2.0;    // artery outer radius, mm
    double r = 1.75;   // artery inner radius, mm
    double Lr = 0.75;  // lumen radius, mm
    double Lx = 0.0;   // lumen offset, mm
    double Ly = 0.0;
    std::vector<CalcificationSpec> calcifications;
};

namespace detail {

inline bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
    auto orient = [](Vec2 a, Vec2 b, Vec2 c) {
        const double v = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        if (v > 0) return 1;
        if (v < 0) return -1;
        return 0;
    };
    const int o1 = orient(p1, p2, q1), o2 = orient(p1, p2, q2);
    const int o3 = orient(q1, q2, p1), o4 = orient(q1, q2, p2);
    return o1 != o2 && o3 != o4;
}

struct Bbox {
    double xlo = std::numeric_limits<double>::max(), xhi = std::numeric_limits<double>::lowest();
    double ylo = std::numeric_limits<double>::max(), yhi = std::numeric_limits<double>::lowest();
    void add(Vec2 p) {
        xlo = std::min(xlo, p.x); xhi = std::max(xhi, p.x);
        ylo = std::min(ylo, p.y); yhi = std::max(yhi, p.y);
    }
    bool overlaps(const Bbox& o) const {
        return xlo <= o.xhi && o.xlo <= xhi && ylo <= o.yhi && o.ylo <= yhi;
    }
};

inline Bbox polyline_bbox(const std::vector<Vec2>& pts) {
    Bbox b;
    for (const Vec2& p : pts) b.add(p);
    return b;
}

inline bool polylines_disjoint(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    if (!polyline_bbox(a).overlaps(polyline_bbox(b))) return true;
    if (point_in_polygon(b, a[0].x, a[0].y)) return false;
    if (point_in_polygon(a, b[0].x, b[0].y)) return false;
    const size_t na = a.size(), nb = b.size();
    for (size_t i = 0; i < na; ++i)
        for (size_t j = 0; j < nb; ++j)
            if (segments_intersect(a[i], a[(i + 1) % na], b[j], b[(j + 1) % nb])) return false;
    return true;
}

// [start, start+span) vs [start2, start2+span2) on the circle, with a gap.
inline bool angular_spans_clear(double s1, double w1, double s2, double w2, double gap) {
    auto wrap = [](double a) {
        a = std::fmod(a, 360.0);
        return a < 0 ? a + 360.0 : a;
    };
    const double d = wrap(s2 - s1);
    return d >= w1 + gap && 360.0 - d >= w2 + gap;
}

} // namespace detail

// Geometric validity of an assembled spec. Outline checks run on the dense
// polyline used for classification, so validity matches what the classifier
// and the mesher will see.
inline bool spec_valid(const GeometrySpec& s, std::string* why = nullptr) {
    auto fail = [&](const char* msg) {
        if (why) *why = msg;
        return false;
    };
    if (!(s.Lr > 0 && s.r > s.Lr && s.R > s.r)) return fail("radii not nested");
    if (std::hypot(s.Lx, s.Ly) + s.Lr >= s.r) return fail("lumen not inside inner radius");
    if (s.calcifications.size() < 1 || s.calcifications.size() > 2)
        return fail("calcification count outside {1,2}");
    std::vector<std::vector<Vec2>> polys;
    for (const auto& c : s.calcifications) {
        if (!(c.inner_radius_mm < c.outer_radius_mm)) return fail("calcification radii inverted");
        if (c.angular_span_deg < 0 || c.angular_span_deg > 180) return fail("span outside [0,180]");
        if (c.outline.control_points.size() != 20) return fail("outline must have 20 control points");
        auto poly = c.outline.polyline();
        for (const Vec2& p : poly) {
            if (std::hypot(p.x, p.y) >= s.r - kCalcClearanceMm)
                return fail("calcification reaches inner radius");
            if (std::hypot(p.x - s.Lx, p.y - s.Ly) < s.Lr + kCalcClearanceMm)
                return fail("calcification touches lumen");
        }
        polys.push_back(std::move(poly));
    }
    if (polys.size() == 2) {
        const auto& a = s.calcifications[0];
        const auto& b = s.calcifications[1];
        if (!detail::angular_spans_clear(a.angular_position_deg, a.angular_span_deg,
                                         b.angular_position_deg, b.angular_span_deg,
                                         kCalcAngularGapDeg))
            return fail("calcification spans overlap");
        if (!detail::polylines_disjoint(polys[0], polys[1]))
            return fail("calcification outlines intersect");
    }
    return true;
}

class RetryBudgetExhausted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Draw a spec from the ranges. Deterministic in `seed`; internally retries
// (bounded) until all invariants hold and throws RetryBudgetExhausted if
// the ranges are over-constrained.
inline GeometrySpec sample_geometry(std::uint64_t seed, const GeometryRanges& ranges) {
    if (!ranges.valid()) throw std::invalid_argument("invalid geometry ranges");
    Rng rng(mix_seed(seed, 0x67656f6d));

    constexpr int kSpecAttempts = 64;
    constexpr int kPlacementAttempts = 100;

    for (int attempt = 0; attempt < kSpecAttempts; ++attempt) {
        GeometrySpec s;
        s.seed = seed;
        s.R = ranges.artery_outer_radius_mm;
        s.r = ranges.artery_inner_radius_mm;
        s.Lr = ranges.lumen_radius_mm;
        s.Lx = rng.uniform(ranges.lumen_offset_x_mm.lo, ranges.lumen_offset_x_mm.hi);
        s.Ly = rng.uniform(ranges.lumen_offset_y_mm.lo, ranges.lumen_offset_y_mm.hi);
        const int cn = static_cast<int>(ranges.calcification_count[static_cast<size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(ranges.calcification_count.size()) - 1))]);

        bool placed_all = true;
        for (int c = 0; c < cn && placed_all; ++c) {
            bool placed = false;
            for (int t = 0; t < kPlacementAttempts; ++t) {
                CalcificationSpec cs;
                cs.inner_radius_mm = rng.uniform(ranges.calc_inner_radius_mm.lo, ranges.calc_inner_radius_mm.hi);
                cs.outer_radius_mm = rng.uniform(ranges.calc_outer_radius_mm.lo, ranges.calc_outer_radius_mm.hi);
                cs.angular_span_deg = rng.uniform(ranges.calc_angle_deg.lo, ranges.calc_angle_deg.hi);
                cs.angular_position_deg = rng.uniform(0.0, 360.0);
                if (cs.angular_span_deg < kMinCalcSpanDeg) continue;
                cs.outline = build_calcification_outline(cs.inner_radius_mm, cs.outer_radius_mm,
                                                         cs.angular_span_deg, cs.angular_position_deg);
                GeometrySpec trial = s;
                trial.calcifications.push_back(cs);
                if (spec_valid(trial)) {
                    s = std::move(trial);
                    placed = true;
                    break;
                }
            }
            placed_all = placed;
        }
        if (placed_all && static_cast<int>(s.calcifications.size()) == cn) return s;
    }
    throw RetryBudgetExhausted("geometry sampling exhausted retries; ranges over-constrained?");
}

// Point classifier with cached outline polylines. Precedence:
// Lumen > Calcium > Fibrous > Artery > Exterior.
class PointClassifier {
public:
    explicit PointClassifier(const GeometrySpec& s)
        : lx_(s.Lx), ly_(s.Ly), lr2_(s.Lr * s.Lr), r2_(s.r * s.r), R2_(s.R * s.R) {
        for (const auto& c : s.calcifications) {
            polys_.push_back(c.outline.polyline());
            boxes_.push_back(detail::polyline_bbox(polys_.back()));
        }
    }

    TissueLabel operator()(double x, double y) const {
        const double dlx = x - lx_, dly = y - ly_;
        if (dlx * dlx + dly * dly < lr2_) return TissueLabel::Lumen;
        for (size_t i = 0; i < polys_.size(); ++i) {
            const auto& b = boxes_[i];
            if (x < b.xlo || x > b.xhi || y < b.ylo || y > b.yhi) continue;
            if (point_in_polygon(polys_[i], x, y)) return TissueLabel::Calcium;
        }
        const double rr = x * x + y * y;
        if (rr < r2_) return TissueLabel::Fibrous;
        if (rr <= R2_) return TissueLabel::Artery;
        return TissueLabel::Exterior;
    }

private:
    double lx_, ly_, lr2_, r2_, R2_;
    std::vector<std::vector<Vec2>> polys_;
    std::vector<detail::Bbox> boxes_;
};

inline TissueLabel classify_point(const GeometrySpec& s, double x, double y) {
    return PointClassifier(s)(x, y);
}

// Reflection across the y axis (x -> -x).
inline GeometrySpec mirror_x(const GeometrySpec& s) {
    GeometrySpec m = s;
    m.Lx = -s.Lx;
    for (auto& c : m.calcifications) {
        double t = 180.0 - (c.angular_position_deg + c.angular_span_deg);
        t = std::fmod(t, 360.0);
        if (t < 0) t += 360.0;
        c.angular_position_deg = t;
        c.outline = build_calcification_outline(c.inner_radius_mm, c.outer_radius_mm,
                                                c.angular_span_deg, c.angular_position_deg);
    }
    return m;
}

// Reflection across the x axis (y -> -y).
inline GeometrySpec mirror_y(const GeometrySpec& s) {
    GeometrySpec m = s;
    m.Ly = -s.Ly;
    for (auto& c : m.calcifications) {
        double t = -(c.angular_position_deg + c.angular_span_deg);
        t = std::fmod(t, 360.0);
        if (t < 0) t += 360.0;
        c.angular_position_deg = t;
        c.outline = build_calcification_outline(c.inner_radius_mm, c.outer_radius_mm,
                                                c.angular_span_deg, c.angular_position_deg);
    }
    return m;
}

// ---- JSON (units: mm and degrees) ----

inline void to_json(nlohmann::json& j, const Vec2& v) { j = nlohmann::json{v.x, v.y}; }
inline void from_json(const nlohmann::json& j, Vec2& v) {
    v.x = j.at(0).get<double>();
    v.y = j.at(1).get<double>();
}

inline void to_json(nlohmann::json& j, const ClosedSpline& s) {
    j = nlohmann::json{{"control_points", s.control_points}, {"kind", s.kind}};
}
inline void from_json(const nlohmann::json& j, ClosedSpline& s) {
    j.at("control_points").get_to(s.control_points);
    j.at("kind").get_to(s.kind);
}

inline void to_json(nlohmann::json& j, const CalcificationSpec& c) {
    j = nlohmann::json{{"inner_radius_mm", c.inner_radius_mm},
                       {"outer_radius_mm", c.outer_radius_mm},
                       {"angular_span_deg", c.angular_span_deg},
                       {"angular_position_deg", c.angular_position_deg},
                       {"outline", c.outline}};
}
inline void from_json(const nlohmann::json& j, CalcificationSpec& c) {
    j.at("inner_radius_mm").get_to(c.inner_radius_mm);
    j.at("outer_radius_mm").get_to(c.outer_radius_mm);
    j.at("angular_span_deg").get_to(c.angular_span_deg);
    j.at("angular_position_deg").get_to(c.angular_position_deg);
    j.at("outline").get_to(c.outline);
}

inline void to_json(nlohmann::json& j, const GeometrySpec& s) {
    j = nlohmann::json{{"seed", s.seed}, {"R", s.R},   {"r", s.r},
                       {"Lr", s.Lr},     {"Lx", s.Lx}, {"Ly", s.Ly},
                       {"calcifications", s.calcifications}};
}
inline void from_json(const nlohmann::json& j, GeometrySpec& s) {
    j.at("seed").get_to(s.seed);
    j.at("R").get_to(s.R);
    j.at("r").get_to(s.r);
    j.at("Lr").get_to(s.Lr);
    j.at("Lx").get_to(s.Lx);
    j.at("Ly").get_to(s.Ly);
    j.at("calcifications").get_to(s.calcifications);
}

inline void to_json(nlohmann::json& j, const Interval& iv) { j = nlohmann::json{iv.lo, iv.hi}; }
inline void from_json(const nlohmann::json& j, Interval& iv) {
    iv.lo = j.at(0).get<double>();
    iv.hi = j.at(1).get<double>();
}

inline void to_json(nlohmann::json& j, const GeometryRanges& g) {
    j = nlohmann::json{{"artery_outer_radius_mm", g.artery_outer_radius_mm},
                       {"artery_inner_radius_mm", g.artery_inner_radius_mm},
                       {"lumen_radius_mm", g.lumen_radius_mm},
                       {"lumen_offset_x_mm", g.lumen_offset_x_mm},
                       {"lumen_offset_y_mm", g.lumen_offset_y_mm},
                       {"calcification_count", g.calcification_count},
                       {"calc_inner_radius_mm", g.calc_inner_radius_mm},
                       {"calc_outer_radius_mm", g.calc_outer_radius_mm},
                       {"calc_angle_deg", g.calc_angle_deg}};
}
inline void from_json(const nlohmann::json& j, GeometryRanges& g) {
    j.at("artery_outer_radius_mm").get_to(g.artery_outer_radius_mm);
    j.at("artery_inner_radius_mm").get_to(g.artery_inner_radius_mm);
    j.at("lumen_radius_mm").get_to(g.lumen_radius_mm);
    j.at("lumen_offset_x_mm").get_to(g.lumen_offset_x_mm);
    j.at("lumen_offset_y_mm").get_to(g.lumen_offset_y_mm);
    j.at("calcification_count").get_to(g.calcification_count);
    j.at("calc_inner_radius_mm").get_to(g.calc_inner_radius_mm);
    j.at("calc_outer_radius_mm").get_to(g.calc_outer_radius_mm);
    j.at("calc_angle_deg").get_to(g.calc_angle_deg);
}

} // namespace artwall
