#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <set>

#include "artwall/geometry.hpp"

using namespace artwall;

namespace {

// Independent point-in-polygon oracle: winding number with explicit
// quadrant bookkeeping, unrelated to the crossing-count implementation.
bool winding_inside(const std::vector<Vec2>& poly, double x, double y) {
    double angle = 0.0;
    const size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
        const Vec2 a = poly[i], b = poly[(i + 1) % n];
        const double a1 = std::atan2(a.y - y, a.x - x);
        const double a2 = std::atan2(b.y - y, b.x - x);
        double d = a2 - a1;
        while (d > kPi) d -= 2 * kPi;
        while (d < -kPi) d += 2 * kPi;
        angle += d;
    }
    return std::abs(angle) > kPi;
}

// Brute-force simplicity check on a dense polyline.
bool polyline_simple(const std::vector<Vec2>& poly) {
    const size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            // skip adjacent segments (shared endpoint)
            if (j == i + 1 || (i == 0 && j == n - 1)) continue;
            if (detail::segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]))
                return false;
        }
    }
    return true;
}

bool specs_identical(const GeometrySpec& a, const GeometrySpec& b) {
    if (std::memcmp(&a.R, &b.R, sizeof(double)) || std::memcmp(&a.r, &b.r, sizeof(double)) ||
        std::memcmp(&a.Lr, &b.Lr, sizeof(double)) || std::memcmp(&a.Lx, &b.Lx, sizeof(double)) ||
        std::memcmp(&a.Ly, &b.Ly, sizeof(double)))
        return false;
    if (a.calcifications.size() != b.calcifications.size()) return false;
    for (size_t i = 0; i < a.calcifications.size(); ++i) {
        const auto& ca = a.calcifications[i];
        const auto& cb = b.calcifications[i];
        if (std::memcmp(&ca.inner_radius_mm, &cb.inner_radius_mm, sizeof(double)) ||
            std::memcmp(&ca.angular_position_deg, &cb.angular_position_deg, sizeof(double)))
            return false;
        if (ca.outline.control_points.size() != cb.outline.control_points.size()) return false;
        for (size_t k = 0; k < ca.outline.control_points.size(); ++k)
            if (std::memcmp(&ca.outline.control_points[k], &cb.outline.control_points[k],
                            sizeof(Vec2)))
                return false;
    }
    return true;
}

} // namespace

TEST_CASE("sampling respects fixed features and ranges") {
    GeometryRanges ranges;
    const GeometrySpec s0 = sample_geometry(0, ranges);
    REQUIRE(s0.R == 2.0);
    REQUIRE(s0.r == 1.75);
    REQUIRE(s0.Lr == 0.75);

    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const GeometrySpec s = sample_geometry(seed, ranges);
        REQUIRE(s.R == 2.0);
        REQUIRE(s.r == 1.75);
        REQUIRE(s.Lr == 0.75);
        REQUIRE(s.Lx >= -0.25);
        REQUIRE(s.Lx <= 0.25);
        REQUIRE(s.Ly >= -0.25);
        REQUIRE(s.Ly <= 0.25);
        REQUIRE(s.calcifications.size() >= 1);
        REQUIRE(s.calcifications.size() <= 2);
        for (const auto& c : s.calcifications) {
            REQUIRE(c.inner_radius_mm >= 1.0);
            REQUIRE(c.inner_radius_mm <= 1.25);
            REQUIRE(c.outer_radius_mm >= 1.3);
            REQUIRE(c.outer_radius_mm <= 1.5);
            REQUIRE(c.angular_span_deg >= 0.0);
            REQUIRE(c.angular_span_deg <= 180.0);
            REQUIRE(c.angular_position_deg >= 0.0);
            REQUIRE(c.angular_position_deg < 360.0);
        }
        REQUIRE(spec_valid(s));
    }
}

TEST_CASE("sampling is deterministic per seed") {
    GeometryRanges ranges;
    for (std::uint64_t seed : {0ULL, 7ULL, 123456789ULL}) {
        const GeometrySpec a = sample_geometry(seed, ranges);
        const GeometrySpec b = sample_geometry(seed, ranges);
        REQUIRE(specs_identical(a, b));
    }
}

TEST_CASE("over-constrained ranges exhaust the retry budget") {
    GeometryRanges ranges;
    ranges.lumen_radius_mm = 1.7;  // lumen fills the wall; calcifications cannot clear it
    REQUIRE_THROWS_AS(sample_geometry(0, ranges), RetryBudgetExhausted);
}

TEST_CASE("calcification outline endpoints and closure") {
    const ClosedSpline s = build_calcification_outline(1.0, 1.4, 90.0, 0.0);
    REQUIRE(s.control_points.size() == 20);
    REQUIRE(s.control_points[0].x == Catch::Approx(1.0).margin(1e-14));
    REQUIRE(s.control_points[0].y == Catch::Approx(0.0).margin(1e-14));
    REQUIRE(s.control_points[9].x == Catch::Approx(0.0).margin(1e-14));
    REQUIRE(s.control_points[9].y == Catch::Approx(1.0).margin(1e-14));

    const Vec2 p0 = s.eval(0.0);
    const Vec2 p1 = s.eval(1.0);
    REQUIRE(p0.x == p1.x);
    REQUIRE(p0.y == p1.y);
    REQUIRE(norm(p0 - s.control_points[0]) < 1e-12);
}

TEST_CASE("degenerate spans are rejected") {
    REQUIRE_THROWS(build_calcification_outline(1.0, 1.4, 2.0, 0.0));
    REQUIRE_THROWS(build_calcification_outline(1.4, 1.0, 90.0, 0.0));
    REQUIRE_THROWS(build_calcification_outline(1.0, 1.4, 200.0, 0.0));
}

TEST_CASE("half-circle outline encloses most of the half annulus") {
    const ClosedSpline s = build_calcification_outline(1.0, 1.4, 180.0, 30.0);
    const double area = std::abs(polygon_signed_area(s.polyline()));
    const double annulus_half = 0.5 * kPi * (1.4 * 1.4 - 1.0 * 1.0);
    REQUIRE(area > 0.9 * annulus_half);
}

TEST_CASE("outline area stays near the annular sector area") {
    Rng rng(42);
    for (int k = 0; k < 50; ++k) {
        const double cr = rng.uniform(1.0, 1.25);
        const double cR = rng.uniform(1.3, 1.5);
        const double ca = rng.uniform(kMinCalcSpanDeg, 180.0);
        const double t0 = rng.uniform(0.0, 360.0);
        const ClosedSpline s = build_calcification_outline(cr, cR, ca, t0);
        const double area = std::abs(polygon_signed_area(s.polyline()));
        const double sector = ca / 360.0 * kPi * (cR * cR - cr * cr);
        REQUIRE(area == Catch::Approx(sector).epsilon(0.25));
    }
}

TEST_CASE("outlines are simple curves") {
    Rng rng(7);
    for (int k = 0; k < 25; ++k) {
        const double cr = rng.uniform(1.0, 1.25);
        const double cR = rng.uniform(1.3, 1.5);
        const double ca = rng.uniform(kMinCalcSpanDeg, 180.0);
        const double t0 = rng.uniform(0.0, 360.0);
        const ClosedSpline s = build_calcification_outline(cr, cR, ca, t0);
        REQUIRE(polyline_simple(s.polyline(256)));
    }
}

TEST_CASE("classification precedence and regions") {
    GeometrySpec s = sample_geometry(3, GeometryRanges{});
    s.Lx = 0.0;
    s.Ly = 0.0;
    REQUIRE(classify_point(s, 0.0, 0.0) == TissueLabel::Lumen);
    REQUIRE(classify_point(s, 3.0, 0.0) == TissueLabel::Exterior);
    REQUIRE(classify_point(s, 1.9, 0.0) == TissueLabel::Artery);

    // A point inside the calcification span at mid radius must be Calcium,
    // cross-checked against an independent winding-number oracle.
    const auto& c = s.calcifications[0];
    const double mid_r = 0.5 * (c.inner_radius_mm + c.outer_radius_mm);
    const double mid_a = deg_to_rad(c.angular_position_deg + 0.5 * c.angular_span_deg);
    const double px = mid_r * std::cos(mid_a), py = mid_r * std::sin(mid_a);
    REQUIRE(classify_point(s, px, py) == TissueLabel::Calcium);
    REQUIRE(winding_inside(c.outline.polyline(), px, py));

    // Precedence: lumen wins over an overlapping calcification.
    GeometrySpec overlap = s;
    overlap.Lx = px;
    overlap.Ly = py;
    REQUIRE(classify_point(overlap, px, py) == TissueLabel::Lumen);
}

TEST_CASE("classifier agrees with winding-number oracle on random points") {
    const GeometrySpec s = sample_geometry(11, GeometryRanges{});
    PointClassifier cls(s);
    std::vector<std::vector<Vec2>> polys;
    for (const auto& c : s.calcifications) polys.push_back(c.outline.polyline());
    Rng rng(99);
    for (int k = 0; k < 2000; ++k) {
        const double x = rng.uniform(-2.1, 2.1);
        const double y = rng.uniform(-2.1, 2.1);
        bool inside_any = false;
        for (const auto& p : polys) inside_any = inside_any || winding_inside(p, x, y);
        const bool lumen = std::hypot(x - s.Lx, y - s.Ly) < s.Lr;
        if (lumen)
            REQUIRE(cls(x, y) == TissueLabel::Lumen);
        else if (inside_any)
            REQUIRE(cls(x, y) == TissueLabel::Calcium);
        else
            REQUIRE(cls(x, y) != TissueLabel::Calcium);
    }
}

TEST_CASE("mirror symmetry of classification") {
    for (std::uint64_t seed : {1ULL, 5ULL, 9ULL}) {
        const GeometrySpec s = sample_geometry(seed, GeometryRanges{});
        const GeometrySpec m = mirror_x(s);
        PointClassifier cs(s), cm(m);
        Rng rng(1000 + seed);
        for (int k = 0; k < 500; ++k) {
            const double x = rng.uniform(-2.0, 2.0);
            const double y = rng.uniform(-2.0, 2.0);
            REQUIRE(cm(-x, y) == cs(x, y));
        }
        const GeometrySpec my = mirror_y(s);
        PointClassifier cmy(my);
        for (int k = 0; k < 500; ++k) {
            const double x = rng.uniform(-2.0, 2.0);
            const double y = rng.uniform(-2.0, 2.0);
            REQUIRE(cmy(x, -y) == cs(x, y));
        }
    }
}

TEST_CASE("geometry JSON round-trip is lossless") {
    const GeometrySpec s = sample_geometry(21, GeometryRanges{});
    nlohmann::json j = s;
    const std::string text = j.dump();
    const GeometrySpec back = nlohmann::json::parse(text).get<GeometrySpec>();
    REQUIRE(specs_identical(s, back));
}

TEST_CASE("labels partition every point") {
    const GeometrySpec s = sample_geometry(17, GeometryRanges{});
    PointClassifier cls(s);
    Rng rng(5);
    std::set<TissueLabel> seen;
    for (int k = 0; k < 5000; ++k) {
        const double x = rng.uniform(-2.5, 2.5);
        const double y = rng.uniform(-2.5, 2.5);
        seen.insert(cls(x, y));  // total function; every point gets exactly one label
    }
    REQUIRE(seen.count(TissueLabel::Lumen));
    REQUIRE(seen.count(TissueLabel::Fibrous));
    REQUIRE(seen.count(TissueLabel::Artery));
    REQUIRE(seen.count(TissueLabel::Exterior));
}
