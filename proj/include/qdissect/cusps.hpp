#pragma once

// Congruence subgroups, cusp classes, widths, and cusp order bounds.
//
// The groups handled here are finite intersections of Hecke-type subgroups,
//   G = G0(N_1) & G1(N_2) & ... ,
// where
//   G0(N) = { [a b; c d] in SL2(Z) : c = 0 mod N },
//   G1(N) = { [a b; c d] in SL2(Z) : c = 0 mod N, a = d = 1 mod N }.
// Every such G contains the principal congruence subgroup of its level
// L = lcm of the N_i, and contains T = [1 1; 0 1].
//
// Cusp machinery:
//   * cusp_equivalent(G, z1, z2): searches for g in G with g z1 = z2.  Any
//     such g factors as  +/- B2 T^k B1^{-1}  where B_i(inf) = z_i; since
//     membership depends on the matrix mod L only, k ranges over [0, L).
//   * cusp_representatives(G): scans a/c with 0 <= a < c <= L, gcd(a,c) = 1,
//     together with inf.  Because two cusps are equivalent under the level-L
//     principal congruence subgroup iff their (a, c) pairs agree up to sign
//     mod L, this candidate list covers every class.  The result is certified
//     complete by checking that the widths sum to the index of the image of
//     G in PSL2(Z).
//   * cusp_width(G, z): least w >= 1 with B T^w B^{-1} in G (divides L).
//
// Order bounds at cusps:  for the modular objects used by the seventh-order
// dissection certificate we record, per cusp alpha/gamma (alpha, gamma >= 0,
// coprime), a rational lower bound on the q-order of the transformed object,
// measured in the local variable q^(1/width) ... normalised here as the
// exponent ord such that the transformed function is q^(ord + o(1)) with
// q = exp(2 pi i tau), tau -> i inf; the valence-style budget multiplies by
// the cusp width.  Bounds for the eta and theta-product factors are exact
// orders; bounds for the universal-mock pieces are one-sided (>=).
//
// The auxiliary piecewise functions:
//   nu(u, w)       (0 <= u, w < 1)
//     = (u + w)/2 - 1/8            if u + w <= 1,
//     = 7/8 - (u + w)/2            otherwise;
//   nutilde(u, w)  (any rational u, w)
//     = D^2/2 + D ({u} - {w}) + k,   D = floor(u) - floor(w),
//     k = min(1/8, nu({u},{w})) if {u} - {w} = +/- 1/2, else nu({u},{w}).

#include <algorithm>
#include <cstdlib>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdissect/common.hpp"

namespace qdissect {

// ---------------------------------------------------------------------------
// Group specification
// ---------------------------------------------------------------------------

enum class GroupKind { Gamma0, Gamma1 };

struct GroupFactor {
    GroupKind kind;
    long long level;
};

struct GroupSpec {
    std::vector<GroupFactor> factors;

    long long level() const {
        long long L = 1;
        for (const auto& f : factors) L = std::lcm(L, f.level);
        return L;
    }

    bool contains(const Matrix& A) const {
        if (A.det() != 1) return false;
        for (const auto& f : factors) {
            const long long N = f.level;
            if (mod_norm(A.c, N) != 0) return false;
            if (f.kind == GroupKind::Gamma1) {
                if (mod_norm(A.a - 1, N) != 0) return false;
                if (mod_norm(A.d - 1, N) != 0) return false;
            }
        }
        return true;
    }

    // Text form "G0(98)&G1(14)"; whitespace around tokens is ignored.
    static GroupSpec parse(const std::string& text) {
        GroupSpec spec;
        std::string token;
        std::istringstream in(text);
        while (std::getline(in, token, '&')) {
            auto l = token.find_first_not_of(" \t");
            auto r = token.find_last_not_of(" \t");
            if (l == std::string::npos)
                throw std::invalid_argument("group: empty factor in '" + text + "'");
            token = token.substr(l, r - l + 1);
            GroupKind kind;
            if (token.rfind("G0(", 0) == 0)      kind = GroupKind::Gamma0;
            else if (token.rfind("G1(", 0) == 0) kind = GroupKind::Gamma1;
            else
                throw std::invalid_argument("group: expected G0(N) or G1(N), got '" + token + "'");
            if (token.back() != ')')
                throw std::invalid_argument("group: missing ')' in '" + token + "'");
            const std::string num = token.substr(3, token.size() - 4);
            if (num.empty() || num.find_first_not_of("0123456789") != std::string::npos)
                throw std::invalid_argument("group: bad level in '" + token + "'");
            const long long N = std::stoll(num);
            if (N <= 0) throw std::invalid_argument("group: level must be positive");
            spec.factors.push_back({kind, N});
        }
        if (spec.factors.empty())
            throw std::invalid_argument("group: no factors in '" + text + "'");
        return spec;
    }

    std::string to_string() const {
        std::string out;
        for (std::size_t i = 0; i < factors.size(); ++i) {
            if (i) out += "&";
            out += (factors[i].kind == GroupKind::Gamma0) ? "G0(" : "G1(";
            out += std::to_string(factors[i].level);
            out += ")";
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// Cusps
// ---------------------------------------------------------------------------

// A cusp a/c in lowest terms with c >= 0; c == 0 encodes the infinite cusp
// (stored as 1/0).
struct Cusp {
    long long a = 1;
    long long c = 0;

    bool is_infinity() const { return c == 0; }

    static Cusp infinity() { return Cusp{1, 0}; }

    static Cusp of(long long a, long long c) {
        if (c == 0) return infinity();
        if (c < 0) { a = -a; c = -c; }
        const long long g = std::gcd(std::llabs(a), c);
        return Cusp{a / g, c / g};
    }

    bool operator==(const Cusp& o) const { return a == o.a && c == o.c; }
    bool operator<(const Cusp& o) const {
        return std::pair(c, a) < std::pair(o.c, o.a);
    }

    std::string to_string() const {
        if (is_infinity()) return "inf";
        return std::to_string(a) + "/" + std::to_string(c);
    }

    static Cusp parse(const std::string& text) {
        if (text == "inf" || text == "oo" || text == "infinity") return infinity();
        const auto slash = text.find('/');
        long long a = 0, c = 1;
        try {
            if (slash == std::string::npos) {
                a = std::stoll(text);
            } else {
                a = std::stoll(text.substr(0, slash));
                c = std::stoll(text.substr(slash + 1));
            }
        } catch (const std::exception&) {
            throw std::invalid_argument("cusp: cannot parse '" + text + "'");
        }
        if (c == 0) throw std::invalid_argument("cusp: zero denominator in '" + text + "'");
        if (std::gcd(std::llabs(a), std::llabs(c)) != 1)
            throw std::invalid_argument("cusp: '" + text + "' is not in lowest terms");
        return of(a, c);
    }
};

// A scaling matrix B in SL2(Z) with B(inf) = z.  For the infinite cusp take
// the identity; otherwise complete (a, c) to [a, -y; c, x] with xa + yc = 1.
inline Matrix cusp_matrix(const Cusp& z) {
    if (z.is_infinity()) return Matrix::identity();
    const Egcd e = egcd(z.a, z.c);
    // e.g == a*e.x + c*e.y and gcd == 1 for a reduced cusp.
    if (e.g != 1) throw std::logic_error("cusp_matrix: cusp not reduced");
    return Matrix{z.a, -e.y, z.c, e.x};
}

// Least w >= 1 such that B T^w B^{-1} lies in G.  For the groups handled
// here the width always divides the level.
inline long long cusp_width(const GroupSpec& G, const Cusp& z) {
    const Matrix B = cusp_matrix(z);
    const Matrix Binv = B.inv();
    const long long L = G.level();
    for (long long w = 1; w <= L; ++w) {
        if (L % w != 0) continue;
        if (G.contains(B * Matrix::T(w) * Binv)) return w;
    }
    throw std::logic_error("cusp_width: no width up to the level (group not congruence?)");
}

// Searches for g in G with g z1 = z2; returns a witness matrix if found.
inline std::optional<Matrix> cusp_equivalent(const GroupSpec& G,
                                             const Cusp& z1, const Cusp& z2) {
    const Matrix B1inv = cusp_matrix(z1).inv();
    const Matrix B2 = cusp_matrix(z2);
    const long long L = G.level();
    for (long long k = 0; k < L; ++k) {
        const Matrix g = B2 * Matrix::T(k) * B1inv;
        if (G.contains(g)) return g;
        const Matrix gn = g.neg();
        if (G.contains(gn)) return gn;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Index of the image of G in SL2(Z/L) resp. PSL2(Z)
// ---------------------------------------------------------------------------

inline Int sl2_group_order(long long L) {
    // |SL2(Z/L)| = L^3 prod_{p | L} (1 - p^-2).
    Int num = Int(L) * L * L;
    long long rem = L;
    for (long long p = 2; p * p <= rem; ++p) {
        if (rem % p) continue;
        while (rem % p == 0) rem /= p;
        num = num / (p * p) * (p * p - 1);
    }
    if (rem > 1) num = num / (rem * rem) * (rem * rem - 1);
    return num;
}

// Order of the image of G in SL2(Z/L):  count (alpha, beta, gamma, delta)
// mod L obeying the congruences with alpha delta - beta gamma = 1.  For the
// G0/G1 factors beta is unconstrained, so for fixed (alpha, gamma, delta)
// the number of beta with beta gamma = alpha delta - 1 (mod L) is
// gcd(gamma, L) when gcd(gamma, L) divides alpha delta - 1, else 0.
inline Int group_image_order(const GroupSpec& G) {
    const long long L = G.level();
    std::vector<char> gamma_ok(L, 1), diag_ok(L, 1), unit_ok(L, 1);
    for (long long r = 0; r < L; ++r) {
        for (const auto& f : G.factors) {
            if (r % f.level != 0) gamma_ok[r] = 0;
            if (f.kind == GroupKind::Gamma1 && (r - 1) % f.level != 0) diag_ok[r] = 0;
        }
    }
    Int count = 0;
    for (long long gamma = 0; gamma < L; ++gamma) {
        if (!gamma_ok[gamma]) continue;
        const long long g = std::gcd(gamma, L);
        for (long long alpha = 0; alpha < L; ++alpha) {
            if (!diag_ok[alpha]) continue;
            for (long long delta = 0; delta < L; ++delta) {
                if (!diag_ok[delta]) continue;
                if (mod_norm(alpha * delta - 1, g) == 0) count += g;
            }
        }
    }
    if (count == 0) throw std::logic_error("group_image_order: empty image");
    return count;
}

inline Int sl2_index(const GroupSpec& G) {
    const Int order = sl2_group_order(G.level());
    const Int image = group_image_order(G);
    if (order % image != 0)
        throw std::logic_error("sl2_index: image order does not divide group order");
    return order / image;
}

inline bool contains_minus_identity(const GroupSpec& G) {
    return G.contains(Matrix{-1, 0, 0, -1});
}

inline Int psl2_index(const GroupSpec& G) {
    const Int idx = sl2_index(G);
    if (contains_minus_identity(G)) return idx;
    if (idx % 2 != 0) throw std::logic_error("psl2_index: odd SL2 index without -I");
    return idx / 2;
}

// ---------------------------------------------------------------------------
// Cusp enumeration
// ---------------------------------------------------------------------------

struct CuspClass {
    Cusp cusp;
    long long width = 0;
};

// Enumerates one representative per cusp class of G, with widths, and
// certifies completeness and inequivalence by checking that the widths sum
// to the index of the image of G in PSL2(Z).  Finite representatives come
// first (scan order: denominator, then numerator); the infinite cusp is last.
inline std::vector<CuspClass> cusp_representatives(const GroupSpec& G) {
    const long long L = G.level();
    // Seed with the infinite cusp so its class is represented canonically
    // (it also shows up as finite fractions a/L during the scan).
    std::vector<CuspClass> reps{{Cusp::infinity(), cusp_width(G, Cusp::infinity())}};
    auto known = [&](const Cusp& z) {
        for (const auto& r : reps)
            if (cusp_equivalent(G, r.cusp, z)) return true;
        return false;
    };
    for (long long c = 1; c <= L; ++c)
        for (long long a = 0; a < c; ++a) {
            if (std::gcd(a, c) != 1) continue;
            const Cusp z{a, c};
            if (!known(z)) reps.push_back({z, cusp_width(G, z)});
        }
    std::rotate(reps.begin(), reps.begin() + 1, reps.end());  // infinity last

    Int width_sum = 0;
    for (const auto& r : reps) width_sum += r.width;
    const Int index = psl2_index(G);
    if (width_sum != index) {
        throw std::logic_error("cusp_representatives: width sum " +
                               width_sum.str() + " != PSL2 index " + index.str());
    }
    return reps;
}

// ---------------------------------------------------------------------------
// Piecewise order-bound helpers
// ---------------------------------------------------------------------------

inline Rational nu_order(const Rational& u, const Rational& w) {
    if (u < 0 || u >= 1 || w < 0 || w >= 1)
        throw std::invalid_argument("nu_order: arguments must lie in [0, 1)");
    const Rational s = u + w;
    if (s <= 1) return s / 2 - make_rational(1, 8);
    return make_rational(7, 8) - s / 2;
}

inline Rational nutilde_order(const Rational& u, const Rational& w) {
    const Int Du = rfloor(u), Dw = rfloor(w);
    const Rational fu = rfrac(u), fw = rfrac(w);
    const Int D = Du - Dw;
    const Rational diff = fu - fw;
    Rational k = nu_order(fu, fw);
    const Rational half = make_rational(1, 2);
    if (diff == half || diff == -half)
        k = std::min(k, make_rational(1, 8));
    return Rational(D) * Rational(D) / 2 + Rational(D) * diff + k;
}

// ---------------------------------------------------------------------------
// Term descriptors and their order bounds at a cusp
// ---------------------------------------------------------------------------

// The five kinds of factor appearing in the certificate's identity terms:
//   Eta     eta(m tau)                                   exact order
//   ThetaF  q^((N-2r)^2/8N) (q^r, q^(N-r), q^N; q^N)_oo   exact order
//   P       two-variable Appell-free product piece P(a,c) exact order
//   NHolo   holomorphic part of the completed rank piece  lower bound
//   MHolo   holomorphic Appell piece at argument m tau    lower bound
struct TermDescriptor {
    enum class Kind { Eta, ThetaF, P, NHolo, MHolo } kind;
    long long a = 0;  // ThetaF: rho; P/NHolo/MHolo: a
    long long c = 0;  // P/NHolo/MHolo: c
    long long m = 0;  // Eta: m; ThetaF: N; MHolo: m

    static TermDescriptor eta(long long m) {
        if (m <= 0) throw std::invalid_argument("eta descriptor: m must be positive");
        return {Kind::Eta, 0, 0, m};
    }
    static TermDescriptor theta_f(long long N, long long rho) {
        if (N <= 0 || rho % N == 0)
            throw std::invalid_argument("theta descriptor: need N > 0 and N not dividing rho");
        return {Kind::ThetaF, rho, 0, N};
    }
    static TermDescriptor p(long long a, long long c) {
        if (c <= 0) throw std::invalid_argument("P descriptor: c must be positive");
        return {Kind::P, a, c, 0};
    }
    static TermDescriptor n_holo(long long a, long long c) {
        if (c <= 0) throw std::invalid_argument("N descriptor: c must be positive");
        return {Kind::NHolo, a, c, 0};
    }
    static TermDescriptor m_holo(long long a, long long c, long long m) {
        if (c <= 0 || m <= 0) throw std::invalid_argument("M descriptor: need c, m positive");
        return {Kind::MHolo, a, c, m};
    }

    std::string to_string() const {
        switch (kind) {
            case Kind::Eta:    return "eta(" + std::to_string(m) + ")";
            case Kind::ThetaF: return "f(" + std::to_string(m) + "," + std::to_string(a) + ")";
            case Kind::P:      return "P(" + std::to_string(a) + "," + std::to_string(c) + ")";
            case Kind::NHolo:  return "N(" + std::to_string(a) + "," + std::to_string(c) + ")";
            case Kind::MHolo:  return "M(" + std::to_string(a) + "," + std::to_string(c) +
                                      ";" + std::to_string(m) + ")";
        }
        return "?";
    }
};

struct OrderBound {
    Rational value;
    bool exact = false;  // true when value is the exact order, not just >=
};

// Order (bound) of one descriptor at the cusp alpha/gamma, in the local
// expansion described at the top of this header.  The cusp is taken with
// alpha, gamma >= 0 and gcd(alpha, gamma) = 1; the infinite cusp is (1, 0).
inline OrderBound term_order_bound(const TermDescriptor& d, const Cusp& z) {
    const long long alpha = z.is_infinity() ? 1 : z.a;
    const long long gamma = z.is_infinity() ? 0 : z.c;
    if (alpha < 0 || gamma < 0)
        throw std::invalid_argument("term_order_bound: cusp must have non-negative entries");

    switch (d.kind) {
        case TermDescriptor::Kind::Eta: {
            const long long g = std::gcd(d.m, gamma);
            return {make_rational(Int(g) * g, Int(24) * d.m), true};
        }
        case TermDescriptor::Kind::ThetaF: {
            const long long N = d.m;
            const long long g = std::gcd(N, gamma);
            const Rational u = rfrac(make_rational(Int(alpha) * d.a, g));
            const Rational s = u - make_rational(1, 2);
            return {make_rational(Int(g) * g, Int(2) * N) * s * s, true};
        }
        case TermDescriptor::Kind::P: {
            // P = const * eta(2 tau) / (eta(tau)^2 t_{(0,2a/c)}(2 tau)) with a
            // sigma-normalized Klein form of q-order ({a1}^2 - {a1})/2.  For
            // even gamma, 2 A tau runs through [[alpha,2beta],[gamma/2,delta]]
            // acting on 2 tau, sending the index to a1 = a gamma / c; for odd
            // gamma it runs through [[2alpha,beta],[gamma,delta/2]] acting on
            // tau/2, sending the index to a1 = 2 a gamma / c.
            if (gamma % 2 == 0) {
                const Rational x = rfrac(make_rational(Int(d.a) * gamma, d.c));
                return {x - x * x, true};
            }
            const Rational x = rfrac(make_rational(Int(2) * d.a * gamma, d.c));
            return {x / 4 - x * x / 4 - make_rational(1, 16), true};
        }
        case TermDescriptor::Kind::NHolo: {
            const Rational ag_c = make_rational(Int(d.a) * gamma, d.c);
            const Rational lead = -ag_c * ag_c;
            if (gamma % 2 == 0) {
                const Rational v = lead + ag_c - make_rational(1, 4) +
                                   2 * nutilde_order(ag_c, make_rational(1, 2));
                return {v, false};
            }
            const Rational v = lead + Rational(alpha) * ag_c -
                               make_rational(Int(alpha) * alpha, 4) +
                               nutilde_order(2 * ag_c, Rational(alpha)) / 2;
            return {v, false};
        }
        case TermDescriptor::Kind::MHolo: {
            const long long g = std::gcd(d.m, gamma);
            const long long x = (d.m / g) * alpha;
            const Rational a_c = make_rational(d.a, d.c);
            const Rational shift = a_c - make_rational(1, 2);
            const Rational v = -make_rational(Int(g) * g * x * x, Int(2) * d.m) * shift * shift +
                               make_rational(Int(g) * g, d.m) *
                                   nutilde_order(make_rational(Int(d.a) * x, d.c),
                                                 make_rational(x, 2));
            return {v, false};
        }
    }
    throw std::logic_error("term_order_bound: unknown descriptor kind");
}

// A product of descriptor powers, e.g. eta(98 tau)^-15 f(98,7)^3 ...
struct DescriptorPower {
    TermDescriptor desc;
    long long power = 1;
};
using TermMonomial = std::vector<DescriptorPower>;

// Sum of power-weighted bounds.  A one-sided bound scaled by a negative
// power would flip into an upper bound, which is unsound for the budget,
// so non-exact descriptors must carry positive powers.
inline OrderBound monomial_order_bound(const TermMonomial& mono, const Cusp& z) {
    OrderBound total{Rational(0), true};
    for (const auto& dp : mono) {
        const OrderBound b = term_order_bound(dp.desc, z);
        if (!b.exact && dp.power < 0)
            throw std::invalid_argument("monomial_order_bound: negative power of a one-sided bound");
        total.value += Rational(dp.power) * b.value;
        total.exact = total.exact && b.exact;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Valence-style budget
// ---------------------------------------------------------------------------

// One identity term, for cusp-bound purposes, is a minimum over one or more
// descriptor monomials (a term that is a sum of products is bounded below by
// the min of its summands' bounds).
struct BoundedTerm {
    std::string label;
    std::vector<TermMonomial> monomials;
};

struct CuspBudget {
    Cusp cusp;
    long long width = 0;
    Rational bound;          // min over terms of the order bound at this cusp
    bool exact = false;      // true if the limiting bound is an exact order
    std::size_t limiting_term = 0;
    Rational contribution;   // width * bound
};

struct ValenceBudget {
    std::vector<CuspBudget> cusps;  // non-infinite classes only
    Rational total;                  // sum of contributions
};

inline OrderBound bounded_term_order(const BoundedTerm& term, const Cusp& z) {
    if (term.monomials.empty())
        throw std::invalid_argument("bounded_term_order: term with no monomials");
    OrderBound best = monomial_order_bound(term.monomials[0], z);
    for (std::size_t i = 1; i < term.monomials.size(); ++i) {
        const OrderBound b = monomial_order_bound(term.monomials[i], z);
        if (b.value < best.value) best = b;
        else if (b.value == best.value) best.exact = best.exact && b.exact;
    }
    if (term.monomials.size() > 1) best.exact = false;
    return best;
}

// Budget = sum over non-infinite cusp classes of width * min-over-terms
// order bound.  The per-cusp rows are computed independently (and may be
// parallelised deterministically by the caller via jobs).
inline ValenceBudget valence_budget(const std::vector<CuspClass>& classes,
                                    const std::vector<BoundedTerm>& terms,
                                    int jobs = 1) {
    if (terms.empty())
        throw std::invalid_argument("valence_budget: no terms");
    std::vector<const CuspClass*> finite;
    for (const auto& cl : classes)
        if (!cl.cusp.is_infinity()) finite.push_back(&cl);

    ValenceBudget out;
    out.cusps.resize(finite.size());
    parallel_for(finite.size(), jobs, [&](std::size_t i) {
        const CuspClass& cl = *finite[i];
        CuspBudget row;
        row.cusp = cl.cusp;
        row.width = cl.width;
        OrderBound best = bounded_term_order(terms[0], cl.cusp);
        std::size_t which = 0;
        for (std::size_t t = 1; t < terms.size(); ++t) {
            const OrderBound b = bounded_term_order(terms[t], cl.cusp);
            if (b.value < best.value) { best = b; which = t; }
        }
        row.bound = best.value;
        row.exact = best.exact;
        row.limiting_term = which;
        row.contribution = Rational(cl.width) * best.value;
        out.cusps[i] = row;
    });
    out.total = Rational(0);
    for (const auto& row : out.cusps) out.total += row.contribution;
    return out;
}

// ---------------------------------------------------------------------------
// Self-check: exact valence sum for weight-zero eta quotients
// ---------------------------------------------------------------------------

// For a weight-zero eta quotient prod eta(m tau)^{r_m} that is modular on G,
// the function has no zeros or poles in the upper half-plane, so the sum
// over all cusp classes of width * (exact order) must vanish.
inline Rational eta_quotient_valence_sum(const GroupSpec& G,
                                         const std::vector<std::pair<long long, long long>>& eta_powers) {
    TermMonomial mono;
    long long weight2 = 0;
    for (const auto& [m, r] : eta_powers) {
        mono.push_back({TermDescriptor::eta(m), r});
        weight2 += r;
    }
    if (weight2 != 0)
        throw std::invalid_argument("eta_quotient_valence_sum: quotient is not weight zero");
    Rational sum = 0;
    for (const auto& cl : cusp_representatives(G)) {
        const OrderBound b = monomial_order_bound(mono, cl.cusp);
        if (!b.exact) throw std::logic_error("eta_quotient_valence_sum: non-exact eta order");
        sum += Rational(cl.width) * b.value;
    }
    return sum;
}

}  // namespace qdissect
