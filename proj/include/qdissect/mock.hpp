#pragma once
// Appell-Lerch machinery behind the rank dissection certificate:
//
//   * an exact q-expansion engine for specializations
//
//         q^alpha * mu(r1 (m tau) + s1, r2 (m tau) + s2; m tau),
//
//     built from the triple-product form of 1/theta and geometric expansion
//     of each bilateral Lambert term;
//   * the concrete series in play: the rank root series N(a,c) and its
//     product companion P(a,c), their weight-1/2 combination scriptM(a,c),
//     the two-parameter family M(a,c; m tau), and the seventh-order pieces
//     N7(k) with their Lambert-series form;
//   * exact root-of-unity multiplier systems (eta multiplier and the derived
//     multipliers on the congruence groups involved);
//   * formal shadow coefficients: the weights of Gamma(1/2; 4 pi y n^2) q^{-n^2}
//     in the non-holomorphic completions, whose cancellation certifies that
//     the final combination is holomorphic;
//   * double-precision evaluators of the defining series (theta, mu, the
//     error-integral tail R, mutilde, eta) used as transformation oracles.

#include "qdissect/cusps.hpp"
#include "qdissect/qseries.hpp"

#include <array>
#include <cmath>
#include <complex>

namespace qdissect {

// ---------------------------------------------------------------------------
// small exact helpers
// ---------------------------------------------------------------------------

inline CycloNumber cyclo_pow(CycloNumber base, long long e) {
    if (e < 0) {
        base = base.inv();
        e = -e;
    }
    CycloNumber acc(base.ring(), 1);
    while (e) {
        if (e & 1) acc = acc * base;
        e >>= 1;
        if (e) base = base * base;
    }
    return acc;
}

// Jacobi symbol extended to all integer denominators:
// (m / +-1) = 1, and (m/n) = -(m/|n|) when both m < 0 and n < 0, else (m/|n|).
inline int ext_jacobi(long long m, long long n) {
    if (n == 0) throw std::invalid_argument("ext_jacobi: zero denominator");
    if (mod_norm(n, 2) == 0) throw std::invalid_argument("ext_jacobi: even denominator");
    const int v = jacobi(m, std::llabs(n));
    return (m < 0 && n < 0) ? -v : v;
}

// ---------------------------------------------------------------------------
// the mu expansion engine
// ---------------------------------------------------------------------------

/*
 * Parameters of q^alpha * mu(u, v; m tau) with
 *
 *     u = r1 (m tau) + s1,   v = r2 (m tau) + s2.
 *
 * Valid when neither (r1, s1) nor (r2, s2) is an integer pair (a lattice
 * point makes a Lambert denominator or theta vanish identically), and v is
 * reduced so that 0 <= r2 < 1.
 */
struct MuSpec {
    Rational alpha;       // global q-power prefactor
    Rational r1, s1;      // u-part
    Rational r2, s2;      // v-part
    long long m = 1;      // modulus multiplier
};

/*
 * Exact expansion.  Writing qm = q^m, z1 = e^{2 pi i s1}, z2 = e^{2 pi i s2}:
 *
 *   mu(u,v; m tau) = e^{pi i s1} qm^{r1/2} / theta(v; m tau)
 *                    * sum_n (-1)^n z2^n qm^{n(n+1)/2 + n r2} / (1 - z1 qm^{n+r1}),
 *
 *   theta(v; m tau) = -i qm^{1/8 - r2/2} e^{-pi i s2}
 *                     (qm;qm) (z2 qm^{r2};qm) (z2^{-1} qm^{1-r2};qm).
 *
 * Each Lambert factor expands geometrically; for negative exponent s the
 * rearrangement 1/(1 - z1 q^{-s'}) = -sum_{j>=1} z1^{-j} q^{s'j} keeps all
 * exponents nonnegative, and a zero exponent contributes the constant
 * 1/(1 - z1).  The bilateral sum is cut once m n(n+1)/2 clears the horizon
 * by a generous margin (exponent growth is quadratic, so this is cheap).
 */
inline QSeries mu_series(const RingPtr& ring, int D, const MuSpec& spec, const Rational& T) {
    if (spec.m <= 0) throw std::invalid_argument("mu_series: modulus multiplier must be positive");
    if (rat_den(spec.r1) == 1 && rat_den(spec.s1) == 1)
        throw std::domain_error("mu_series: u is a lattice point (Lambert pole)");
    if (rat_den(spec.r2) == 1 && rat_den(spec.s2) == 1)
        throw std::domain_error("mu_series: v is a lattice point (theta zero)");
    if (spec.r2 < 0 || spec.r2 >= 1)
        throw std::invalid_argument("mu_series: need 0 <= r2 < 1 (reduce v first)");

    const Rational mr(spec.m);
    const CycloNumber one(ring, 1);
    const CycloNumber z1 = root_of_unity(ring, spec.s1);
    const CycloNumber z2 = root_of_unity(ring, spec.s2);
    const CycloNumber iu = root_of_unity(ring, make_rational(1, 4));

    const Rational pre_exp = spec.alpha + mr * spec.r1 / 2;
    const Rational th_exp = mr * (spec.r2 / 2 - make_rational(1, 8));
    // Working horizon: the slack absorbs every negative leading exponent in
    // play (the bilateral sum's is >= -m, 1/theta's is >= -m/8).
    const Rational Tw = T - pre_exp - th_exp + mr + make_rational(spec.m, 8) + 2;

    QSeries den = pochhammer_series(ring, D, one, mr, mr, Tw) *
                  pochhammer_series(ring, D, z2, mr * spec.r2, mr, Tw) *
                  pochhammer_series(ring, D, z2.inv(), mr * (Rational(1) - spec.r2), mr, Tw);
    const QSeries theta_inv =
        den.inverted().scaled(iu * root_of_unity(ring, spec.s2 / 2)).shifted(th_exp);

    const Rational cut = Tw + mr * (rabs(spec.r1) + rabs(spec.r2) + 2) + 2;
    QSeries sum = QSeries::zero(ring, D, Tw);
    auto add_term = [&](long long n) {
        const Rational e = mr * (make_rational(n * (n + 1), 2) + Rational(n) * spec.r2);
        if (e >= Tw) return;
        const Rational s = mr * (Rational(n) + spec.r1);
        const Rational Tn = Tw - e;
        QSeries lam;
        if (s > 0)
            lam = geometric_series(ring, D, z1, s, Tn);
        else if (s == 0)
            lam = QSeries::constant(ring, D, (one - z1).inv(), Tn);
        else
            lam = QSeries::one(ring, D, Tn) - geometric_series(ring, D, z1.inv(), -s, Tn);
        CycloNumber cn = root_of_unity(ring, spec.s2 * n);
        if (mod_norm(n, 2) == 1) cn = -cn;
        sum = sum + lam.scaled(cn).shifted(e);
    };
    for (long long n = 0; mr * make_rational(n * (n + 1), 2) <= cut; ++n) add_term(n);
    for (long long n = -1; mr * make_rational(n * (n + 1), 2) <= cut; --n) add_term(n);

    QSeries mu = (sum * theta_inv).scaled(root_of_unity(ring, spec.s1 / 2)).shifted(pre_exp);
    if (mu.truncation() < T) throw std::logic_error("mu_series: internal horizon shortfall");
    return mu.truncated(T);
}

// ---------------------------------------------------------------------------
// concrete series
// ---------------------------------------------------------------------------

// Holomorphic part of the rank root series:
// q^{-1/4} mu(2a/c, tau; 2 tau) + (i/2) zeta_c^{-a}.  Needs c > 0, c never
// dividing 2a; the ring must contain zeta_{lcm(4, 2c)}.
inline QSeries N_series(const RingPtr& ring, int D, long long a, long long c, const Rational& T) {
    if (c <= 0 || mod_norm(2 * a, c) == 0)
        throw std::invalid_argument("N_series: need c > 0 and c not dividing 2a");
    MuSpec spec;
    spec.alpha = make_rational(-1, 4);
    spec.m = 2;
    spec.r1 = 0;
    spec.s1 = make_rational(2 * a, c);
    spec.r2 = make_rational(1, 2);
    spec.s2 = 0;
    QSeries mu = mu_series(ring, D, spec, T);
    const CycloNumber corr =
        root_of_unity(ring, make_rational(1, 4) - make_rational(a, c)) * make_rational(1, 2);
    return mu + QSeries::constant(ring, D, corr, mu.truncation());
}

// P(a,c) = (-q;q) (q^2;q^2)^2 / ((q;q) j(zeta_c^{2a}; q^2)), integer
// exponents, leading coefficient 1/(1 - zeta_c^{2a}).
inline QSeries P_series(const RingPtr& ring, int D, long long a, long long c, const Rational& T) {
    if (c <= 0 || mod_norm(2 * a, c) == 0)
        throw std::invalid_argument("P_series: need c > 0 and c not dividing 2a");
    const CycloNumber one(ring, 1);
    const CycloNumber z = root_of_unity(ring, make_rational(2 * a, c));
    QSeries num = pochhammer_series(ring, D, CycloNumber(ring, -1), 1, 1, T) *
                  pochhammer_series(ring, D, one, 2, 2, T).powed(2);
    QSeries den = pochhammer_series(ring, D, one, 1, 1, T) * jacprod_series(ring, D, z, 0, 2, T);
    return (num * den.inverted()).truncated(T);
}

// scriptM(a,c) = 2 zeta (1-zeta)/(1+zeta) * (P - i N), zeta = zeta_c^a: the
// weight-1/2 combination equal to the rank generating function at z = zeta.
inline QSeries scriptM_series(const RingPtr& ring, int D, long long a, long long c,
                              const Rational& T) {
    const CycloNumber one(ring, 1);
    const CycloNumber z = root_of_unity(ring, make_rational(a, c));
    const CycloNumber pref = CycloNumber(ring, 2) * z * (one - z) * (one + z).inv();
    const CycloNumber iu = root_of_unity(ring, make_rational(1, 4));
    QSeries p = P_series(ring, D, a, c, T);
    QSeries n = N_series(ring, D, a, c, T);
    return (p - n.scaled(iu)).scaled(pref);
}

// Seventh-order piece, holomorphic part (no added constant: the completion
// tail carries none when the u-fraction sits strictly inside (-1/2, 1/2)):
// q^{-k^2+7k-49/4} mu(14k tau, 49 tau; 98 tau), k reduced into 1..6.
inline QSeries N7_series(const RingPtr& ring, int D, long long k, const Rational& T) {
    k = mod_norm(k, 7);
    if (k == 0) throw std::invalid_argument("N7_series: 7 divides k");
    MuSpec spec;
    spec.alpha = Rational(7 * k - k * k) - make_rational(49, 4);
    spec.m = 98;
    spec.r1 = make_rational(k, 7);
    spec.s1 = 0;
    spec.r2 = make_rational(1, 2);
    spec.s2 = 0;
    return mu_series(ring, D, spec, T);
}

// Lambert form of the same object:
// q^{7k-k^2} (q^98;q^98)/(q^49;q^49)^2 * sum_n (-1)^n q^{49n(n+1)}/(1 - q^{49n+7k}).
inline QSeries lambert_N7_series(const RingPtr& ring, int D, long long k, const Rational& T) {
    k = mod_norm(k, 7);
    if (k == 0) throw std::invalid_argument("lambert_N7_series: 7 divides k");
    const CycloNumber one(ring, 1);
    const Rational pre(7 * k - k * k);
    const Rational Tw = T - pre + 2;

    QSeries sum = QSeries::zero(ring, D, Tw);
    auto add_term = [&](long long n) {
        const Rational e(49 * n * (n + 1));
        if (e >= Tw) return;
        const long long s = 49 * n + 7 * k;
        const Rational Tn = Tw - e;
        QSeries lam;
        if (s > 0)
            lam = geometric_series(ring, D, one, Rational(s), Tn);
        else
            lam = QSeries::one(ring, D, Tn) - geometric_series(ring, D, one, Rational(-s), Tn);
        if (mod_norm(n, 2) == 1) lam = -lam;
        sum = sum + lam.shifted(e);
    };
    for (long long n = 0; Rational(49 * n * (n + 1)) <= Tw + 2; ++n) add_term(n);
    for (long long n = -1; Rational(49 * n * (n + 1)) <= Tw + 2; --n) add_term(n);

    QSeries quot = pochhammer_series(ring, D, one, 98, 98, Tw) *
                   pochhammer_series(ring, D, one, 49, 49, Tw).powed(2).inverted();
    return (sum * quot).shifted(pre).truncated(T);
}

// Two-parameter family at modulus m tau:
// q^{-m (a/c - 1/2)^2 / 2} mu(a (m tau)/c, (m tau)/2; m tau), holomorphic
// part (same no-constant rule).  Callers reduce to 1 <= a < c; the
// half-period boundary a/c = 1/2 is deliberately unsupported.
inline QSeries M_series(const RingPtr& ring, int D, long long a, long long c, long long m,
                        const Rational& T) {
    if (c <= 0 || mod_norm(a, c) == 0)
        throw std::invalid_argument("M_series: need c > 0 and c not dividing a");
    if (a < 1 || a >= c) throw std::invalid_argument("M_series: reduce a into 1 <= a < c first");
    if (2 * a == c) throw std::domain_error("M_series: half-period boundary case not supported");
    const Rational f = make_rational(a, c) - make_rational(1, 2);
    MuSpec spec;
    spec.alpha = -Rational(m) * f * f / 2;
    spec.m = m;
    spec.r1 = make_rational(a, c);
    spec.s1 = 0;
    spec.r2 = make_rational(1, 2);
    spec.s2 = 0;
    return mu_series(ring, D, spec, T);
}

// ---------------------------------------------------------------------------
// multiplier systems (exact roots of unity; all values are stated relative
// to the principal branch of sqrt(gamma tau + delta))
// ---------------------------------------------------------------------------

struct MultiplierValue {
    CycloNumber value;  // exact root of unity in Q(zeta_24)
    const char* branch = "principal sqrt(gamma tau + delta)";
};

/*
 * Dedekind eta multiplier nu(A), the exact 24th root of unity with
 * eta(A tau) = nu(A) sqrt(gamma tau + delta) eta(tau):
 *
 *   gamma odd:  (delta/|gamma|) exp(pi i/12 ((alpha+delta)gamma
 *                 - beta delta (gamma^2-1) - 3 gamma)),
 *   delta odd:  (gamma/delta)_ext exp(pi i/12 ((alpha+delta)gamma
 *                 - beta delta (gamma^2-1) + 3 delta - 3 - 3 gamma delta)).
 *
 * One of gamma, delta is always odd; when both are, the two branches agree
 * (property-tested).  gamma = 0 falls to the delta-odd branch.
 */
inline MultiplierValue eta_multiplier(const Matrix& A) {
    if (A.det() != 1) throw std::invalid_argument("eta_multiplier: matrix not in SL2(Z)");
    static const RingPtr ring = cyclo_ring(24);
    const Int al(A.a), be(A.b), ga(A.c), de(A.d);
    Int K;
    int sign;
    if (mod_norm(A.c, 2) == 1) {
        K = (al + de) * ga - be * de * (ga * ga - 1) - 3 * ga;
        sign = jacobi(A.d, std::llabs(A.c));
    } else {
        K = (al + de) * ga - be * de * (ga * ga - 1) + 3 * de - 3 - 3 * ga * de;
        sign = ext_jacobi(A.c, A.d);
    }
    const long long e = ((K % 24) + 24).convert_to<long long>() % 24;
    CycloNumber v = CycloNumber::zeta(ring, e);
    if (sign < 0) v = -v;
    return {v};
}

enum class MultiplierKind { N, P, N7, Fproduct };

struct MultiplierParams {
    long long c = 7;                // root order for kinds N and P
    std::array<long long, 8> r{};   // product exponents r0..r7 for Fproduct
};

namespace detail {
inline void require_member(const GroupSpec& spec, const Matrix& A, const std::string& who) {
    if (A.det() != 1) throw std::invalid_argument(who + ": matrix not in SL2(Z)");
    for (const auto& f : spec.factors) {
        const std::string lvl = std::to_string(f.level);
        if (mod_norm(A.c, f.level) != 0)
            throw std::invalid_argument(who + ": gamma not 0 mod " + lvl);
        if (f.kind == GroupKind::Gamma1) {
            if (mod_norm(A.a - 1, f.level) != 0)
                throw std::invalid_argument(who + ": alpha not 1 mod " + lvl);
            if (mod_norm(A.d - 1, f.level) != 0)
                throw std::invalid_argument(who + ": delta not 1 mod " + lvl);
        }
    }
}

// nu(2^A)^{-3} (-1)^{beta + (alpha-1)/2} i^{-alpha beta}, the multiplier
// shared by the N, P and N7 transformation laws (gamma even is guaranteed
// by membership, so alpha is odd and 2^A = [[alpha, 2 beta],[gamma/2, delta]]
// is integral).
inline CycloNumber half_integral_multiplier(const Matrix& A) {
    static const RingPtr ring = cyclo_ring(24);
    const Matrix A2{A.a, 2 * A.b, A.c / 2, A.d};
    CycloNumber v = cyclo_pow(eta_multiplier(A2).value, -3);
    if (mod_norm(A.b + (A.a - 1) / 2, 2) == 1) v = -v;
    const long long q = mod_norm(-mod_norm(A.a, 4) * mod_norm(A.b, 4), 4);
    return v * CycloNumber::zeta(ring, 6 * q);
}
}  // namespace detail

/*
 * Multipliers of the transformation laws in play, as exact roots of unity:
 *
 *   kind N, P   on  G0(2) & G0(c^2) & G1(c):   nu(2^A)^{-3} (-1)^{beta+(alpha-1)/2} i^{-alpha beta}
 *   kind N7     on  G0(98) & G1(14):           the same expression
 *   kind Fproduct on G0(98) & G1(14):          nu(98^A)^{r0+3R} (-1)^{((alpha-1)/2+beta)S} i^{alpha beta S},
 *                                              R = r1+...+r7, S = r1+r3+r5+r7,
 *
 * for eta(98 tau)^{r0} prod_k f_{98,7k}(tau)^{r_k}; weight (r0+R)/2.
 * Membership failures name the violated congruence.
 */
inline MultiplierValue group_multiplier(MultiplierKind kind, const Matrix& A,
                                        const MultiplierParams& p = {}) {
    static const RingPtr ring = cyclo_ring(24);
    switch (kind) {
        case MultiplierKind::N:
        case MultiplierKind::P: {
            GroupSpec g;
            g.factors = {{GroupKind::Gamma0, 2},
                         {GroupKind::Gamma0, p.c * p.c},
                         {GroupKind::Gamma1, p.c}};
            detail::require_member(g, A, "group_multiplier(N/P)");
            return {detail::half_integral_multiplier(A)};
        }
        case MultiplierKind::N7: {
            GroupSpec g;
            g.factors = {{GroupKind::Gamma0, 98}, {GroupKind::Gamma1, 14}};
            detail::require_member(g, A, "group_multiplier(N7)");
            return {detail::half_integral_multiplier(A)};
        }
        case MultiplierKind::Fproduct: {
            GroupSpec g;
            g.factors = {{GroupKind::Gamma0, 98}, {GroupKind::Gamma1, 14}};
            detail::require_member(g, A, "group_multiplier(Fproduct)");
            long long R = 0;
            for (int k = 1; k <= 7; ++k) R += p.r[static_cast<std::size_t>(k)];
            const long long S = p.r[1] + p.r[3] + p.r[5] + p.r[7];
            const Matrix A98{A.a, 98 * A.b, A.c / 98, A.d};
            CycloNumber v = cyclo_pow(eta_multiplier(A98).value, p.r[0] + 3 * R);
            if (mod_norm(((A.a - 1) / 2 + A.b) * S, 2) == 1) v = -v;
            const long long q = mod_norm(mod_norm(A.a, 4) * mod_norm(A.b, 4) * mod_norm(S, 4), 4);
            return {v * CycloNumber::zeta(ring, 6 * q)};
        }
    }
    throw std::logic_error("group_multiplier: unreachable");
}

// ---------------------------------------------------------------------------
// formal non-holomorphic coefficients
// ---------------------------------------------------------------------------

// Weight of Gamma(1/2; 4 pi y n^2) q^{-n^2} in a completion tail; the basis
// label is formal (never evaluated) and the common 1/sqrt(pi) factor is
// tracked symbolically, i.e. excluded from the weight.
struct NonholoCoefficient {
    long long n = 1;
    CycloNumber weight;
};

struct NonholoKind {
    enum class Tag { M17, N7 };
    Tag tag = Tag::M17;
    long long k = 0;
    static NonholoKind m17() { return {Tag::M17, 0}; }
    static NonholoKind n7(long long k) { return {Tag::N7, k}; }
};

/*
 * M17 (the combination scriptM at (a,c) = (1,7)):
 *     (1-z)/(1+z) (-1)^n (z^{-2n} - z^{2n}),   z = zeta_7;
 * N7(k): supported on n = +-k mod 7,
 *     n = 7j+k (j >= 0):  +(i/2) (-1)^j,
 *     n = 7j-k (j >= 1):  -(i/2) (-1)^j.
 */
inline NonholoCoefficient nonholo_coeff(const RingPtr& ring, const NonholoKind& kind, long long n) {
    if (n < 1) throw std::invalid_argument("nonholo_coeff: n must be positive");
    if (kind.tag == NonholoKind::Tag::M17) {
        const CycloNumber one(ring, 1);
        const CycloNumber z = root_of_unity(ring, make_rational(1, 7));
        CycloNumber w = (one - z) * (one + z).inv() *
                        (root_of_unity(ring, make_rational(-2 * n, 7)) -
                         root_of_unity(ring, make_rational(2 * n, 7)));
        if (mod_norm(n, 2) == 1) w = -w;
        return {n, w};
    }
    const long long k = mod_norm(kind.k, 7);
    if (k == 0) throw std::invalid_argument("nonholo_coeff: 7 divides k");
    CycloNumber w(ring);
    if (mod_norm(n - k, 7) == 0) {
        const long long j = (n - k) / 7;
        w = root_of_unity(ring, make_rational(1, 4)) * make_rational(1, 2);
        if (mod_norm(j, 2) == 1) w = -w;
    } else if (mod_norm(n + k, 7) == 0) {
        const long long j = (n + k) / 7;
        w = -(root_of_unity(ring, make_rational(1, 4)) * make_rational(1, 2));
        if (mod_norm(j, 2) == 1) w = -w;
    }
    return {n, w};
}

// ---------------------------------------------------------------------------
// numeric oracles (double precision, Im tau > 0)
// ---------------------------------------------------------------------------

namespace numeric {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

inline void check_upper_half(std::complex<double> tau, const char* who) {
    if (!(tau.imag() > 0)) throw std::invalid_argument(std::string(who) + ": Im(tau) must be positive");
}

// is u within eps of the lattice Z + tau Z?
inline bool near_lattice(std::complex<double> u, std::complex<double> tau, double eps = 1e-9) {
    const double a = u.imag() / tau.imag();
    if (std::abs(a - std::round(a)) > eps) return false;
    const std::complex<double> rest = u - std::round(a) * tau;
    return std::abs(rest.real() - std::round(rest.real())) <= eps;
}

// theta(z; tau) = sum_{nu in Z+1/2} exp(pi i nu^2 tau + 2 pi i nu (z + 1/2))
inline std::complex<double> theta_eval(std::complex<double> z, std::complex<double> tau) {
    check_upper_half(tau, "theta_eval");
    const std::complex<double> I(0.0, 1.0);
    std::complex<double> acc = 0.0;
    for (long long n = 0; n < 4096; ++n) {
        const double nu = static_cast<double>(n) + 0.5;
        const std::complex<double> quad = std::exp(kPi * I * nu * nu * tau);
        const std::complex<double> lin = std::exp(2.0 * kPi * I * nu * (z + 0.5));
        const std::complex<double> t = quad * (lin + 1.0 / lin);
        acc += t;
        if (n > 6 && std::abs(t) < 1e-17 * (1.0 + std::abs(acc))) return acc;
    }
    throw std::runtime_error("theta_eval: series did not converge");
}

// E(z) = 2 int_0^z e^{-pi w^2} dw = erf(sqrt(pi) z) for real z
inline double E_integral(double z) { return std::erf(std::sqrt(kPi) * z); }

// R(u; tau) = sum_{nu in Z+1/2} (sgn(nu) - E((nu+a) sqrt(2y)))
//             (-1)^{nu - 1/2} exp(-pi i nu^2 tau - 2 pi i nu u),  a = Im u / y
inline std::complex<double> R_eval(std::complex<double> u, std::complex<double> tau) {
    check_upper_half(tau, "R_eval");
    const std::complex<double> I(0.0, 1.0);
    const double y = tau.imag();
    const double a = u.imag() / y;
    const double root2y = std::sqrt(2.0 * y);
    std::complex<double> acc = 0.0;
    int dead = 0;
    for (long long n = 0; n < 2048 && dead < 2; ++n) {
        ++dead;
        for (const double nu : {static_cast<double>(n) + 0.5, -(static_cast<double>(n) + 0.5)}) {
            const double x = std::sqrt(kPi) * (nu + a) * root2y;
            // sgn(nu) - E(.) without cancellation:
            const double w = nu > 0 ? std::erfc(x) : -std::erfc(-x);
            if (w == 0.0) continue;
            // (-1)^{nu - 1/2}: exponent is n for nu = n + 1/2, -(n+1) for the mirror
            const long long par = nu > 0 ? n : n + 1;
            const double sign = (par % 2 == 0) ? 1.0 : -1.0;
            acc += w * sign * std::exp(-kPi * I * nu * nu * tau - 2.0 * kPi * I * nu * u);
            dead = 0;
        }
    }
    return acc;
}

// mu(u, v; tau) from the defining bilateral Lambert sum
inline std::complex<double> mu_eval(std::complex<double> u, std::complex<double> v,
                                    std::complex<double> tau) {
    check_upper_half(tau, "mu_eval");
    if (near_lattice(u, tau)) throw std::domain_error("mu_eval: u on the lattice");
    if (near_lattice(v, tau)) throw std::domain_error("mu_eval: v on the lattice");
    const std::complex<double> I(0.0, 1.0);
    const double y = tau.imag();
    const auto lambert_term = [&](long long m) {
        const double md = static_cast<double>(m);
        const std::complex<double> num =
            std::exp(kPi * I * md * (md + 1.0) * tau + 2.0 * kPi * I * md * v);
        const double sign = (mod_norm(m, 2) == 0) ? 1.0 : -1.0;
        if (2.0 * kPi * (-md) * y > 500.0) {
            // denominator dominated by its exponential: 1/(1-E) = -E^{-1}/(1-E^{-1})
            const std::complex<double> Einv = std::exp(-2.0 * kPi * I * (md * tau + u));
            return sign * num * (-Einv) / (1.0 - Einv);
        }
        return sign * num / (1.0 - std::exp(2.0 * kPi * I * (md * tau + u)));
    };
    std::complex<double> acc = 0.0;
    for (long long n = 0; n < 2048; ++n) {
        std::complex<double> t = lambert_term(n);
        if (n > 0) t += lambert_term(-n);
        acc += t;
        if (n > 6 && std::abs(t) < 1e-17 * (1.0 + std::abs(acc)))
            return std::exp(kPi * I * u) / theta_eval(v, tau) * acc;
    }
    throw std::runtime_error("mu_eval: series did not converge");
}

// eta(tau) = q^{1/24} prod (1 - q^n)
inline std::complex<double> eta_eval(std::complex<double> tau) {
    check_upper_half(tau, "eta_eval");
    const std::complex<double> I(0.0, 1.0);
    const std::complex<double> q = std::exp(2.0 * kPi * I * tau);
    const double aq = std::abs(q);
    std::complex<double> acc = std::exp(2.0 * kPi * I * tau / 24.0);
    std::complex<double> qn = 1.0;
    for (long long n = 1; n <= 500000; ++n) {
        qn *= q;
        acc *= (1.0 - qn);
        if (std::abs(qn) / (1.0 - aq) < 1e-17) return acc;
    }
    throw std::runtime_error("eta_eval: Im(tau) too small");
}

}  // namespace numeric

// mutilde(u, v; tau) = mu(u, v; tau) + (i/2) R(u - v; tau)
inline std::complex<double> mutilde_eval_numeric(std::complex<double> u, std::complex<double> v,
                                                 std::complex<double> tau) {
    return numeric::mu_eval(u, v, tau) +
           std::complex<double>(0.0, 0.5) * numeric::R_eval(u - v, tau);
}

}  // namespace qdissect
