#include <algorithm>
#include <set>

#include "doctest.h"
#include "opplab/exceptional.hpp"
#include "opplab/lattice.hpp"
#include "support.hpp"

using namespace opplab;
using namespace opplab::testing;

namespace {

// rho t = log H and A rho t = s.
ExceptionalParams params_for(double H, double s) {
    ExceptionalParams p;
    p.rho = 1;
    p.t = std::log(H);
    p.A = s / p.t;
    return p;
}

bool has_line(const ExceptionalSet& e, const IVec3& v) {
    return std::any_of(e.lines.begin(), e.lines.end(), [&](const ExceptionalLine& l) { return l.v == v; });
}

std::vector<IVec3> brute_lines(const QForm& q, double H, double eps) {
    std::vector<IVec3> out;
    const int n = static_cast<int>(H);
    for (int x = -n; x <= n; ++x)
        for (int y = -n; y <= n; ++y)
            for (int z = -n; z <= n; ++z) {
                const IVec3 v(x, y, z);
                if (v.isZero() || gcd3(v) != 1 || sign_normalized(v) != v) continue;
                if (static_cast<double>(v.squaredNorm()) > H * H) continue;
                if (std::abs(q(v)) <= eps) out.push_back(v);
            }
    std::sort(out.begin(), out.end(), [](const IVec3& a, const IVec3& b) { return lex_less(a, b); });
    return out;
}

std::vector<IVec3> sorted_vectors(const ExceptionalSet& e) {
    std::vector<IVec3> out;
    for (const auto& l : e.lines) out.push_back(l.v);
    std::sort(out.begin(), out.end(), [](const IVec3& a, const IVec3& b) { return lex_less(a, b); });
    return out;
}

}  // namespace

TEST_CASE("exceptional lines of the model form") {
    const auto e = find_exceptional_lines(q0(), params_for(3, 10));
    CHECK(has_line(e, IVec3(1, 0, 0)));
    CHECK(has_line(e, IVec3(0, 0, 1)));

    const auto wide = find_exceptional_lines(q0(), params_for(3, 0.5));
    const std::vector<IVec3> expected{IVec3(0, 0, 1), IVec3(1, -2, 2), IVec3(1, 0, 0),
                                      IVec3(1, 2, 2), IVec3(2, -2, 1), IVec3(2, 2, 1)};
    CHECK(sorted_vectors(wide) == expected);
    CHECK(sorted_vectors(wide) == brute_lines(q0(), 3, std::exp(-0.5)));
    CHECK_FALSE(has_line(wide, IVec3(1, 1, 1)));
    CHECK(wide.exceeds_four());
    for (const auto& l : wide.lines) {
        CHECK(l.value == 0);
        CHECK(l.norm <= 3);
    }
}

TEST_CASE("irrational diagonal form has no exceptional subspaces") {
    CHECK(find_exceptional(q1(), params_for(50, 25)).empty());
    ExceptionalParams p;
    p.t = std::log(4000.0);
    CHECK(find_exceptional(q1(), p).empty());
}

TEST_CASE("exceptional lines agree with brute force") {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 10; ++i) {
        const QForm q = random_normalized_form(rng);
        for (double s : {0.5, 1.5}) CHECK(sorted_vectors(find_exceptional_lines(q, params_for(12, s))) ==
                                          brute_lines(q, 12, std::exp(-s)));
    }
}

TEST_CASE("rational forms expose their isotropic vectors") {
    // x^2 - y^2 - 2 z^2 scaled to det 1; (1,1,0) is isotropic.
    const QForm q = normalize_det(QForm::from_coefficients(1, -1, -2, 0, 0, 0)).form;
    const auto e = find_exceptional_lines(q, params_for(3, 10));
    CHECK(has_line(e, IVec3(1, 1, 0)));
    CHECK(has_line(e, IVec3(1, -1, 0)));
}

TEST_CASE("detection is monotone in t") {
    const QForm q = normalize_det(QForm::from_coefficients(1, -1, -2, 0, 0, 0)).form;
    ExceptionalParams p;
    p.rho = 1;
    p.A = 1;
    std::vector<IVec3> prev;
    for (double H : {2.0, 4.0, 8.0, 16.0}) {
        p.t = std::log(H);
        const auto now = sorted_vectors(find_exceptional_lines(q, p));
        for (const IVec3& v : prev) CHECK(std::find(now.begin(), now.end(), v) != now.end());
        prev = now;
    }
}

TEST_CASE("budget") {
    ExceptionalParams p;
    p.rho = 1;
    p.A = 1;
    p.t = std::log(1e6) * 1.01;
    try {
        find_exceptional_lines(q0(), p);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::BudgetExceeded);
    }
}

TEST_CASE("kernel_basis") {
    auto [w1, w2] = kernel_basis(IVec3(1, 0, 0));
    CHECK(cross(w1, w2) == IVec3(1, 0, 0));
    CHECK(w1[0] == 0);
    CHECK(w2[0] == 0);

    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> c(-40, 40);
    for (int i = 0; i < 200; ++i) {
        const IVec3 u(c(rng), c(rng), c(rng));
        if (u.isZero() || gcd3(u) != 1) continue;
        const auto [a, b] = kernel_basis(u);
        CHECK(cross(a, b) == u);
        CHECK(a.dot(u) == 0);
        CHECK(b.dot(u) == 0);
        CHECK(a.squaredNorm() <= b.squaredNorm());
        CHECK(2 * std::abs(a.dot(b)) <= a.squaredNorm());
    }
}

TEST_CASE("exceptional planes") {
    const auto e = find_exceptional_planes(q0(), params_for(3, 10));
    const auto it = std::find_if(e.planes.begin(), e.planes.end(),
                                 [](const ExceptionalPlane& p) { return p.u == IVec3(1, 0, 0); });
    REQUIRE(it != e.planes.end());
    CHECK(it->dual_value == 0);
    for (const auto& p : e.planes) CHECK(cross(p.w1, p.w2) == p.u);
    CHECK(find_exceptional_planes(q1(), params_for(20, 15)).planes.empty());
}

TEST_CASE("special_count") {
    ExceptionalSet line;
    line.lines.push_back({IVec3(1, 0, 0), 1, 0});
    CHECK(special_count(q0(), line, -0.5, 0.5, 10) == 20);
    CHECK(special_count(q0(), ExceptionalSet{}, -0.5, 0.5, 10) == 0);

    ExceptionalSet plane;
    const auto [w1, w2] = kernel_basis(IVec3(1, 0, 0));
    plane.planes.push_back({IVec3(1, 0, 0), w1, w2, 1, 1, 0});
    CHECK(special_count(q0(), plane, -0.5, 0.5, 5) == 10);

    // The line (0,0,1) lies in the plane x = 0 and must not be counted twice.
    ExceptionalSet both = plane;
    both.lines.push_back({IVec3(0, 0, 1), 1, 0});
    CHECK(special_count(q0(), both, -0.5, 0.5, 5) == 10);

    const auto all = find_exceptional(q0(), params_for(3, 10));
    for (double T : {5.0, 10.0, 20.0}) {
        const auto s = special_count(q0(), all, -0.5, 0.5, T);
        CHECK(s > 0);
        CHECK(s <= count_in_shell(q0(), -0.5, 0.5, T, false).total);
    }
}

TEST_CASE("rational_from_five") {
    const std::array<IVec3, 5> vs{IVec3(1, 0, 0), IVec3(0, 0, 1), IVec3(1, 2, 2), IVec3(2, 2, 1), IVec3(1, -2, 2)};
    for (const auto& v : vs) REQUIRE(q0()(v) == 0);
    auto r = rational_from_five(q0(), vs);
    CHECK(r.exact);
    CHECK(r.distance == 0);
    CHECK(((r.P == IMat3(q0().matrix().cast<std::int64_t>())) || (r.P == IMat3(-q0().matrix().cast<std::int64_t>()))));

    const std::array<IVec3, 5> coplanar{IVec3(1, 0, 0), IVec3(0, 1, 0), IVec3(1, 1, 0), IVec3(2, 2, 1),
                                        IVec3(1, -2, 2)};
    try {
        rational_from_five(q0(), coplanar);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::CoplanarInput);
    }

    std::mt19937_64 rng(12);
    Mat3 noise;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j <= i; ++j) noise(i, j) = noise(j, i) = uniform(rng, -1e-6, 1e-6);
    const QForm perturbed = normalize_det(QForm::from_matrix(q0().matrix() + noise)).form;
    r = rational_from_five(perturbed, vs);
    CHECK_FALSE(r.exact);
    CHECK(r.distance <= 1e-4);

    CHECK_THROWS_AS(rational_from_five(q1(), vs), Error);
}

TEST_CASE("diophantine_quality") {
    auto r = diophantine_quality(q0(), 1);
    CHECK(r.distance == 0);
    CHECK(r.P == IMat3(q0().matrix().cast<std::int64_t>()));

    const auto a = diophantine_quality(q1(), 3);
    const auto b = diophantine_quality(q1(), 3);
    CHECK(a.distance > 0);
    CHECK(a.distance == b.distance);
    CHECK(a.P == b.P);
    CHECK(a.distance <= diophantine_quality(q1(), 2).distance);

    CHECK_THROWS_AS(diophantine_quality(q0(), 0), Error);
    CHECK_THROWS_AS(diophantine_quality(q0(), 13), Error);
}
