#pragma once
// Ground-truth overpartition rank data: direct enumeration for small n, a
// weighted-count dynamic program for tables up to n ~ 160, and the exact
// q-expansion of the two-variable rank generating function O(z; tau) at
// roots of unity z = zeta_c^a.

#include "qdissect/qseries.hpp"

#include <array>

namespace qdissect {

// One overpartition: non-increasing parts plus an overline flag on the first
// appearance of each part size that carries one.
struct Overpartition {
    std::vector<int> parts;
    std::vector<bool> overlined;  // parallel to parts

    int rank() const { return parts.empty() ? 0 : parts.front() - static_cast<int>(parts.size()); }
};

inline constexpr int kEnumerationCap = 40;

/*
 * All overpartitions of n, each exactly once: recursively list the underlying
 * partitions, then take every subset of distinct part sizes as the overlined
 * set (the overline always sits on the first appearance of its size).
 */
inline std::vector<Overpartition> enumerate_overpartitions(int n) {
    if (n < 0 || n > kEnumerationCap)
        throw std::invalid_argument("enumerate_overpartitions: n beyond enumeration cap");
    std::vector<Overpartition> out;
    std::vector<int> parts;
    auto emit = [&] {
        std::vector<std::size_t> firsts;  // indices of first appearances
        for (std::size_t i = 0; i < parts.size(); ++i)
            if (i == 0 || parts[i] != parts[i - 1]) firsts.push_back(i);
        for (std::size_t mask = 0; mask < (1ull << firsts.size()); ++mask) {
            Overpartition op;
            op.parts = parts;
            op.overlined.assign(parts.size(), false);
            for (std::size_t b = 0; b < firsts.size(); ++b)
                if (mask >> b & 1) op.overlined[firsts[b]] = true;
            out.push_back(std::move(op));
        }
    };
    auto rec = [&](auto&& self, int remaining, int max_part) -> void {
        if (remaining == 0) {
            emit();
            return;
        }
        for (int p = std::min(remaining, max_part); p >= 1; --p) {
            parts.push_back(p);
            self(self, remaining - p, p);
            parts.pop_back();
        }
    };
    rec(rec, n, n);
    return out;
}

/*
 * Exact table of N(m,n) = #overpartitions of n with rank m, built by a DP on
 * h_l(n,p) = sum over overpartitions of n with all parts <= l and p parts of
 * 2^{#distinct part sizes} -- the overline weight.  Splitting off the parts of
 * size l (j >= 1 copies contribute weight 2):
 *
 *   h_l(n,p) = h_{l-1}(n,p) + sum_{j>=1} 2 h_{l-1}(n - j l, p - j),
 *
 * and an overpartition whose largest part is exactly l has rank l - p, so the
 * layer differences h_l - h_{l-1} accumulate straight into N(rank, n).
 * Counts fit comfortably in unsigned __int128 for n in the thousands.
 */
class RankTable {
  public:
    explicit RankTable(int n_max) : n_max_(n_max), counts_(n_max + 1) {
        if (n_max < 0) throw std::invalid_argument("RankTable: negative n_max");
        for (int n = 0; n <= n_max; ++n) counts_[n].assign(2 * n + 1, 0);
        counts_[0][0] = 1;  // empty overpartition, rank 0

        using Wide = unsigned __int128;
        const int P = n_max + 1;  // part-count axis
        std::vector<Wide> prev(static_cast<std::size_t>(n_max + 1) * P, 0), cur;
        prev[0] = 1;  // h_0(0,0) = 1
        auto at = [P](std::vector<Wide>& v, int n, int p) -> Wide& {
            return v[static_cast<std::size_t>(n) * P + p];
        };
        for (int l = 1; l <= n_max; ++l) {
            cur = prev;
            for (int n = l; n <= n_max; ++n)
                for (int p = 1; p <= n; ++p) {
                    Wide add = 0;
                    for (int j = 1; j * l <= n && j <= p; ++j) add += 2 * at(prev, n - j * l, p - j);
                    if (add) at(cur, n, p) += add;
                }
            for (int n = l; n <= n_max; ++n)
                for (int p = 1; p <= n; ++p) {
                    Wide h = at(cur, n, p) - at(prev, n, p);
                    if (h) counts_[n][static_cast<std::size_t>((l - p) + n)] += h;
                }
            std::swap(prev, cur);
        }
    }

    int n_max() const { return n_max_; }

    // N(m,n)
    Int count(long long m, long long n) const {
        if (n < 0 || n > n_max_) throw std::out_of_range("RankTable::count: n out of range");
        if (m < -n || m > n) return 0;
        return wide_to_int(counts_[static_cast<std::size_t>(n)][static_cast<std::size_t>(m + n)]);
    }

    // N(k,t,n) = #overpartitions of n with rank = k (mod t)
    Int count_mod(long long k, long long t, long long n) const {
        if (t <= 0) throw std::invalid_argument("RankTable::count_mod: t must be positive");
        if (n < 0 || n > n_max_) throw std::out_of_range("RankTable::count_mod: n out of range");
        Int acc = 0;
        for (long long m = -n; m <= n; ++m)
            if (mod_norm(m - k, t) == 0) acc += count(m, n);
        return acc;
    }

    // total overpartition count of n
    Int total(long long n) const {
        Int acc = 0;
        for (long long m = -n; m <= n; ++m) acc += count(m, n);
        return acc;
    }

  private:
    static Int wide_to_int(unsigned __int128 v) {
        Int hi = static_cast<std::uint64_t>(v >> 64);
        return (hi << 64) | Int(static_cast<std::uint64_t>(v));
    }

    int n_max_;
    std::vector<std::vector<unsigned __int128>> counts_;
};

// O(zeta_c^a; tau) = sum_n sum_m N(m,n) zeta_c^{am} q^n assembled directly
// from a rank table (integer exponent grid, D = 1).
inline QSeries O_from_rank_table(const RankTable& table, long long a, long long c, const RingPtr& ring,
                                 const Rational& T) {
    if (c <= 0 || ring->conductor() % c != 0)
        throw std::invalid_argument("O_from_rank_table: ring lacks zeta_c");
    Rational Teff = std::min(T, Rational(table.n_max() + 1));
    long long n_hi = std::min<long long>(table.n_max(), rceil(Teff).convert_to<long long>() - 1);
    QSeries acc = QSeries::zero(ring, 1, Teff);
    for (long long n = 0; n <= n_hi; ++n) {
        std::vector<Int> by_residue(static_cast<std::size_t>(c), 0);
        for (long long m = -n; m <= n; ++m) {
            Int v = table.count(m, n);
            if (v != 0) by_residue[static_cast<std::size_t>(mod_norm(a * m, c))] += v;
        }
        CycloNumber coeff(ring);
        for (long long r = 0; r < c; ++r)
            if (by_residue[static_cast<std::size_t>(r)] != 0)
                coeff += CycloNumber::zeta(ring, r * (ring->conductor() / c)) *
                         Rational(by_residue[static_cast<std::size_t>(r)]);
        if (!coeff.is_zero()) acc = acc + QSeries::monomial(ring, 1, coeff, Rational(n), Teff);
    }
    return acc;
}

/*
 * O(z; tau) at z = zeta_c^a (c not dividing 2a), expanded exactly to T by two
 * independent routes that are asserted equal:
 *
 *  (1) the defining q-hypergeometric sum
 *        sum_{n>=0} (-1;q)_n q^{n(n+1)/2} / ((zq;q)_n (z^{-1}q;q)_n),
 *      built incrementally: t_n = t_{n-1} q^n (1+q^{n-1}) / ((1-zq^n)(1-z^{-1}q^n));
 *
 *  (2) the Lambert form
 *        ((-q;q)/(q;q)) [1 + 2 sum_{n>=1} (1-z)(1-z^{-1}) (-1)^n q^{n^2+n}
 *                                          / ((1-zq^n)(1-z^{-1}q^n))].
 */
inline QSeries O_at_root(long long a, long long c, const RingPtr& ring, const Rational& T) {
    if (c <= 0 || mod_norm(2 * a, c) == 0)
        throw std::invalid_argument("O_at_root: need z != +-1 (c must not divide 2a)");
    if (ring->conductor() % c != 0) throw std::invalid_argument("O_at_root: ring lacks zeta_c");
    const int D = 1;
    CycloNumber z = CycloNumber::zeta(ring, a * (ring->conductor() / c));
    CycloNumber zi = z.inv();
    CycloNumber one(ring, 1);

    // route 1: q-hypergeometric sum
    QSeries sum1 = QSeries::zero(ring, D, T);
    QSeries term = QSeries::one(ring, D, T);
    for (long long n = 0;; ++n) {
        if (n > 0) {
            if (Rational(n * (n + 1) / 2) >= T) break;
            // t_n = t_{n-1} * (1 + q^{n-1}) * q^n / ((1 - z q^n)(1 - z^{-1} q^n))
            QSeries step = term + term.shifted(Rational(n - 1)).truncated(T);
            step = step.shifted(Rational(n));
            step = step * geometric_series(ring, D, z, Rational(n), T);
            step = step * geometric_series(ring, D, zi, Rational(n), T);
            term = step.truncated(T);
        }
        sum1 = sum1 + term;
    }

    // route 2: Lambert form
    QSeries pref = pochhammer_series(ring, D, -one, Rational(1), Rational(1), T) *
                   pochhammer_series(ring, D, one, Rational(1), Rational(1), T).inverted();
    QSeries bracket = QSeries::one(ring, D, T);
    CycloNumber factor = (one - z) * (one - zi) * Rational(2);
    for (long long n = 1; Rational(n * n + n) < T; ++n) {
        QSeries piece = geometric_series(ring, D, z, Rational(n), T) *
                        geometric_series(ring, D, zi, Rational(n), T);
        piece = piece.shifted(Rational(n * n + n)).truncated(T).scaled(factor);
        if (n % 2 == 1) piece = -piece;
        bracket = bracket + piece;
    }
    QSeries sum2 = (pref * bracket).truncated(T);

    if (!sum1.agrees_with(sum2))
        throw std::logic_error("O_at_root: hypergeometric and Lambert routes disagree");
    return sum1;
}

// R_{r,s}(d; q) = sum_n (N(r,7,7n+d) - N(s,7,7n+d)) q^n
inline QSeries rank_difference_series(const RankTable& table, long long r, long long s, long long d,
                                      const RingPtr& ring, const Rational& T) {
    if (r < 0 || r >= 7 || s < 0 || s >= 7 || d < 0 || d >= 7)
        throw std::invalid_argument("rank_difference_series: residues must lie in [0,7)");
    QSeries acc = QSeries::zero(ring, 1, T);
    for (long long n = 0; 7 * n + d <= table.n_max() && Rational(n) < T; ++n) {
        Rational v(table.count_mod(r, 7, 7 * n + d) - table.count_mod(s, 7, 7 * n + d));
        if (v != 0) acc = acc + QSeries::monomial(ring, 1, CycloNumber(ring, v), Rational(n), T);
    }
    Rational Tcap(std::min<long long>((table.n_max() - d) / 7 + 1, rceil(T).convert_to<long long>()));
    return acc.truncated(std::min(T, Tcap));
}

}  // namespace qdissect
