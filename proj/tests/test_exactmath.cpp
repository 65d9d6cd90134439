#include <catch2/catch_amalgamated.hpp>

#include "qdissect/exactmath.hpp"

#include <complex>
#include <random>

using namespace qdissect;

namespace {

std::vector<Int> ints(std::initializer_list<long long> v) {
    return std::vector<Int>(v.begin(), v.end());
}

// xz + yz^2 + wz^3 + wz^4 + yz^5 + xz^6 over Q(zeta_7): the palindromic root
// combinations that appear as series coefficients in the seventh-root setting.
CycloNumber palindromic7(const RingPtr& r7, long long x, long long y, long long w) {
    auto z = [&](long long k) { return CycloNumber::zeta(r7, k); };
    return z(1) * Rational(x) + z(2) * Rational(y) + z(3) * Rational(w) + z(4) * Rational(w) +
           z(5) * Rational(y) + z(6) * Rational(x);
}

CycloNumber random_element(const RingPtr& ring, std::mt19937& gen) {
    std::uniform_int_distribution<int> num(-9, 9);
    std::uniform_int_distribution<int> den(1, 4);
    std::vector<Rational> c(ring->degree());
    for (auto& v : c) v = make_rational(num(gen), den(gen));
    return CycloNumber::from_coeffs(ring, std::move(c));
}

}  // namespace

TEST_CASE("rational helpers") {
    CHECK(make_rational(6, -4) == make_rational(-3, 2));
    CHECK(rat_to_string(make_rational(-6, 4)) == "-3/2");
    CHECK(rat_from_string("-3/2") == make_rational(-3, 2));
    CHECK(rat_from_string("42") == Rational(42));
    CHECK(rfloor(make_rational(-1, 4)) == -1);
    CHECK(rfrac(make_rational(-1, 4)) == make_rational(3, 4));
    CHECK(rceil(make_rational(9, 4)) == 3);
    CHECK_THROWS(rat_from_string("x/y"));
}

TEST_CASE("cyclotomic polynomials") {
    CHECK(cyclotomic_poly(1) == ints({-1, 1}));
    CHECK(cyclotomic_poly(2) == ints({1, 1}));
    CHECK(cyclotomic_poly(7) == ints({1, 1, 1, 1, 1, 1, 1}));
    CHECK(cyclotomic_poly(14) == ints({1, -1, 1, -1, 1, -1, 1}));
    CHECK(cyclotomic_poly(24) == ints({1, 0, 0, 0, -1, 0, 0, 0, 1}));
    CHECK(cyclotomic_poly(28) == ints({1, 0, -1, 0, 1, 0, -1, 0, 1, 0, -1, 0, 1}));
    CHECK(euler_phi(28) == 12);
}

TEST_CASE("ring arithmetic basics in Q(zeta_7)") {
    auto r7 = cyclo_ring(7);
    auto z = CycloNumber::zeta(r7);
    CHECK(CycloNumber::zeta(r7, 1) * CycloNumber::zeta(r7, 6) == CycloNumber(r7, 1));

    // 1 + z + ... + z^6 = 0 annihilates everything
    CycloNumber all(r7, 1);
    for (int k = 1; k <= 6; ++k) all += CycloNumber::zeta(r7, k);
    CHECK(all.is_zero());
    CHECK((all * palindromic7(r7, 3, -2, 5)).is_zero());

    CHECK(CycloNumber(r7, 1).inv() == CycloNumber(r7, 1));
    CHECK(z.inv() == CycloNumber::zeta(r7, 6));
    CycloNumber u = CycloNumber(r7, 1) + z;
    CHECK(u.inv() * u == CycloNumber(r7, 1));
    CHECK_THROWS(CycloNumber(r7).inv());
}

TEST_CASE("field axioms on random samples") {
    std::mt19937 gen(20260814);
    for (int n : {7, 24, 28}) {
        auto ring = cyclo_ring(n);
        for (int trial = 0; trial < 10; ++trial) {
            auto a = random_element(ring, gen);
            auto b = random_element(ring, gen);
            auto c = random_element(ring, gen);
            CHECK((a * b) * c == a * (b * c));
            CHECK(a * (b + c) == a * b + a * c);
            if (!a.is_zero()) CHECK(a * a.inv() == CycloNumber(ring, 1));
        }
    }
}

TEST_CASE("numeric embedding is a ring homomorphism") {
    std::mt19937 gen(7);
    auto r28 = cyclo_ring(28);
    for (int trial = 0; trial < 8; ++trial) {
        auto a = random_element(r28, gen);
        auto b = random_element(r28, gen);
        auto lhs = (a * b).embed();
        auto rhs = a.embed() * b.embed();
        CHECK(std::abs(lhs - rhs) <= 1e-10 * (1.0 + std::abs(rhs)));
    }
    auto z7 = CycloNumber::zeta(cyclo_ring(7));
    std::complex<double> expect = std::polar(1.0, 2 * 3.14159265358979323846 / 7);
    CHECK(std::abs(z7.embed() - expect) < 1e-14);
    CHECK(CycloNumber(cyclo_ring(7), 1).embed() == std::complex<double>(1.0, 0.0));
}

TEST_CASE("palindromic combinations embed to real numbers") {
    auto r7 = cyclo_ring(7);
    auto a = palindromic7(r7, -16, -8, -8);
    for (long long j : {1, 2, 3}) CHECK(std::abs(a.embed(j).imag()) < 1e-12);
    // Galois stability under zeta -> zeta^{-1}
    CHECK(a.galois(6) == a);
}

TEST_CASE("subfield structure inside Q(zeta_28)") {
    auto r28 = cyclo_ring(28);
    auto r7 = cyclo_ring(7);
    auto i = CycloNumber::zeta(r28, 7);
    CHECK(i * i == CycloNumber(r28, -1));

    auto z7_in_28 = CycloNumber::zeta(r28, 4);  // zeta_7 = zeta_28^4
    CHECK(CycloNumber::zeta(r7).embed_into(r28) == z7_in_28);
    CHECK(z7_in_28.in_subfield(7));
    CHECK(!i.in_subfield(7));
    CHECK(!CycloNumber::zeta(r28).in_subfield(7));

    // restriction round-trips through the bigger field
    auto x = palindromic7(r7, 2, -3, 7) * make_rational(5, 3) + CycloNumber(r7, make_rational(1, 2));
    auto lifted = x.embed_into(r28);
    CHECK(lifted.in_subfield(7));
    CHECK(lifted.restrict_to(r7) == x);
    CHECK_THROWS(i.restrict_to(r7));

    // zeta_14 = zeta_28^2 and the sign relation zeta_14 = -zeta_7^4
    auto z14 = CycloNumber::zeta(r28, 2);
    CHECK(z14 == -CycloNumber::zeta(r28, 4 * 4));
}

TEST_CASE("linear solver") {
    // 2x2 invertible system
    std::vector<std::vector<Rational>> A{{Rational(2), Rational(1)}, {Rational(1), Rational(-1)}};
    std::vector<Rational> b{Rational(4), Rational(-1)};
    auto sol = solve_linear<Rational>(A, b, Rational(0));
    REQUIRE(sol.has_value());
    CHECK((*sol)[0] == Rational(1));
    CHECK((*sol)[1] == Rational(2));

    // inconsistent overdetermined system
    std::vector<std::vector<Rational>> B{{Rational(1)}, {Rational(1)}};
    std::vector<Rational> c{Rational(1), Rational(2)};
    CHECK(!solve_linear<Rational>(B, c, Rational(0)).has_value());
}

TEST_CASE("pretty printing") {
    auto r7 = cyclo_ring(7);
    auto x = CycloNumber(r7, 1) - CycloNumber::zeta(r7, 3) * make_rational(1, 2);
    CHECK(x.pretty() == "1 - 1/2*z^3");
    CHECK(CycloNumber(r7).pretty() == "0");
}
