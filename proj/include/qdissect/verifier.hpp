#pragma once
/*
 * End-to-end verifier for the mod-7 dissection of the overpartition rank
 * generating function
 *
 *   O(z; tau) = sum_{n >= 0} sum_m N(m, n) z^m q^n   at   z = zeta_7,
 *
 * in two halves.
 *
 *  (1) verify_mod7: a linear identity between sixty-two weight-zero terms
 *      built from eta(98 tau), the theta products f(98, 7k), three
 *      seventh-order Lambert/mu objects N7(k) and one P/N combination
 *      M(1,7), all living on G0(98) & G1(14).  The q-expansion of the sum
 *      is computed exactly below a horizon T; a valence-style budget over
 *      the non-infinite cusp classes then turns "vanishes far enough" into
 *      "vanishes identically".  The outcome is a replayable certificate.
 *
 *  (2) dissection_check: the arithmetic consequence of (1) -- the explicit
 *      7-dissection of O(zeta_7; tau) into 58 eta/theta-product terms -- is
 *      compared coefficientwise against direct rank tabulation, and the
 *      integer rank-difference series R_{r,0}(d; q) are pulled back out of
 *      the table through the linear independence of zeta_7 + zeta_7^{-1},
 *      zeta_7^2 + zeta_7^{-2}, zeta_7^3 + zeta_7^{-3} over Q.
 *
 * Both term tables are embedded at configure time from data/ and carry a
 * checksum line; parsing recomputes the checksum and refuses to run on any
 * mismatch between the embedded copy and its declared digest.
 */

#include "qdissect/cusps.hpp"
#include "qdissect/embedded_data.hpp"
#include "qdissect/mock.hpp"
#include "qdissect/qseries.hpp"
#include "qdissect/ranks.hpp"

#include <json.hpp>

#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace qdissect {

inline constexpr const char* kEngineVersion = "qdissect/1.0.0";
// Q(zeta_28) carries zeta_7, i and every constant the mock pieces need.
inline constexpr int kIdentityConductor = 28;
// exponent lattice (1/24)Z: fine enough for eta(98 tau) (lead 49/12), the
// theta products (leads (7-k)^2/4) and the quarter-integer mock leads
inline constexpr int kIdentityGrid = 24;

// ---------------------------------------------------------------------------
// term tables
// ---------------------------------------------------------------------------

/*
 * One row of the identity table:
 *
 *   scale * A(x,y,z) * eta(98 t)^{e0} * prod_{k=1..7} f(98,7k)^{e_k} * S
 *
 * with A(x,y,z) = x (w + w^6) + y (w^2 + w^5) + z (w^3 + w^4), w = zeta_7,
 * and S one of: nothing, N7(k) (shorthand for i * N7_series(k)) or M17
 * (the P/N combination at (1,7)).
 */
struct IdentityTerm {
    enum class Special { None, N7, M17 };

    int index = 0;  // 1-based row number in the table
    Rational scale = Rational(1);
    bool has_A = false;
    long long ax = 0, ay = 0, az = 0;
    std::array<long long, 8> e{};
    Special special = Special::None;
    long long special_k = 0;

    // canonical text of everything shaping the unscaled series (exponents
    // and special factor, but not the row's scalar multiplier)
    std::string shape_key() const {
        std::string s = "e";
        for (long long v : e) s += ":" + std::to_string(v);
        switch (special) {
            case Special::None: s += "|none"; break;
            case Special::N7:   s += "|N7(" + std::to_string(special_k) + ")"; break;
            case Special::M17:  s += "|M17"; break;
        }
        return s;
    }

    std::string label() const {
        std::string s = "term " + std::to_string(index);
        if (special == Special::N7) s += " [N7(" + std::to_string(special_k) + ")]";
        else if (special == Special::M17) s += " [M17]";
        return s;
    }
};

/*
 * One row of the dissection table, written in the dissection variable x
 * (the checker substitutes x -> q^7 and multiplies by q^d at assembly):
 *
 *   scale * A(x,y,z) * x^{qpow} * prod_{a=0..7} J_a^{j_a} * [L(k)]
 *
 * with J_0 = (x^14; x^14)_inf, J_a = (x^a, x^{14-a}; x^14)_inf for
 * 1 <= a <= 7 (so J_7 = (x^7; x^14)_inf^2) and the bilateral sum
 *
 *   L(k) = sum_{n in Z} (-1)^n x^{7n(n+1)} / (1 - x^{7n+k}).
 *
 * An absent multiplier ("none") means the scalar coefficient 1.
 */
struct DissectionTerm {
    int index = 0;  // 1-based row number in the full table
    int d = 0;      // residue class served by this row
    Rational scale = Rational(1);
    bool has_A = true;
    long long ax = 0, ay = 0, az = 0;
    long long qpow = 0;
    std::array<long long, 8> j{};
    long long lambert_k = 0;  // 0: plain product row
};

namespace detail {

inline std::string strip_all_ws(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s)
        if (c != ' ' && c != '\t' && c != '\r' && c != '\n') out += c;
    return out;
}

inline std::string trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_on(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline long long parse_ll(const std::string& field, const char* who) {
    const std::string t = trim(field);
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(t, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument(std::string(who) + ": bad integer '" + t + "'");
    }
    if (used != t.size()) throw std::invalid_argument(std::string(who) + ": bad integer '" + t + "'");
    return v;
}

/*
 * Scan a data table: keep the payload lines verbatim and fold their
 * whitespace-stripped form, each followed by '\n', into an FNV-1a checksum
 * that must match the file's own "digest fnv1a64 <hex>" line.
 */
struct TableScan {
    std::vector<std::string> rows;  // payload lines, original spelling
    std::string digest;             // recomputed checksum, 16 hex digits
};

inline TableScan scan_table(std::string_view text, const std::string& who) {
    TableScan out;
    std::optional<std::string> declared;
    std::uint64_t h = 14695981039346656037ULL;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        const std::string_view raw = text.substr(pos, nl - pos);
        pos = nl + 1;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("digest", 0) == 0) {
            const std::string flat = strip_all_ws(line);
            if (flat.rfind("digestfnv1a64", 0) != 0 || flat.size() != 13 + 16)
                throw std::invalid_argument(who + ": malformed digest line '" + line + "'");
            if (declared) throw std::invalid_argument(who + ": repeated digest line");
            declared = flat.substr(13);
            continue;
        }
        h = fnv1a("\n", fnv1a(strip_all_ws(line), h));
        out.rows.push_back(line);
    }
    out.digest = hex64(h);
    if (!declared) throw std::invalid_argument(who + ": missing digest line");
    if (*declared != out.digest)
        throw std::invalid_argument(who + ": checksum mismatch between embedded data and its digest line (declared " +
                                    *declared + ", recomputed " + out.digest + ")");
    return out;
}

// multiplier field: "none" or "x,y,z"
struct MultiplierField {
    bool has_A = false;
    long long x = 0, y = 0, z = 0;
};

inline MultiplierField parse_multiplier(const std::string& field, const char* who) {
    MultiplierField m;
    const std::string t = trim(field);
    if (t == "none") return m;
    const std::vector<std::string> parts = split_on(t, ',');
    if (parts.size() != 3) throw std::invalid_argument(std::string(who) + ": bad multiplier '" + t + "'");
    m.has_A = true;
    m.x = parse_ll(parts[0], who);
    m.y = parse_ll(parts[1], who);
    m.z = parse_ll(parts[2], who);
    return m;
}

inline std::array<long long, 8> parse_exponents(const std::string& field, const char* who) {
    std::istringstream in(trim(field));
    std::array<long long, 8> e{};
    for (auto& v : e)
        if (!(in >> v)) throw std::invalid_argument(std::string(who) + ": expected 8 exponents in '" + field + "'");
    std::string extra;
    if (in >> extra) throw std::invalid_argument(std::string(who) + ": trailing data in '" + field + "'");
    return e;
}

}  // namespace detail

struct IdentityTable {
    std::vector<IdentityTerm> terms;
    std::string digest;
};

struct DissectionTable {
    std::vector<DissectionTerm> terms;
    std::string digest;
};

inline IdentityTable parse_identity_table(std::string_view text) {
    static const char* who = "identity table";
    const detail::TableScan scan = detail::scan_table(text, who);
    IdentityTable out;
    out.digest = scan.digest;
    int index = 0;
    for (const std::string& line : scan.rows) {
        const std::vector<std::string> f = detail::split_on(line, '|');
        if (f.size() != 4)
            throw std::invalid_argument(std::string(who) + ": expected 4 fields in '" + line + "'");
        IdentityTerm t;
        t.index = ++index;
        t.scale = rat_from_string(detail::trim(f[0]));
        const detail::MultiplierField m = detail::parse_multiplier(f[1], who);
        t.has_A = m.has_A;
        t.ax = m.x;
        t.ay = m.y;
        t.az = m.z;
        t.e = detail::parse_exponents(f[2], who);
        const std::string special = detail::trim(f[3]);
        if (special == "none") {
            t.special = IdentityTerm::Special::None;
        } else if (special == "M17") {
            t.special = IdentityTerm::Special::M17;
        } else if (special.rfind("N7(", 0) == 0 && special.back() == ')') {
            t.special = IdentityTerm::Special::N7;
            t.special_k = detail::parse_ll(special.substr(3, special.size() - 4), who);
        } else {
            throw std::invalid_argument(std::string(who) + ": unknown special '" + special + "'");
        }
        out.terms.push_back(std::move(t));
    }
    return out;
}

inline DissectionTable parse_dissection_table(std::string_view text) {
    static const char* who = "dissection table";
    const detail::TableScan scan = detail::scan_table(text, who);
    DissectionTable out;
    out.digest = scan.digest;
    int index = 0;
    for (const std::string& line : scan.rows) {
        const std::vector<std::string> f = detail::split_on(line, '|');
        if (f.size() != 6)
            throw std::invalid_argument(std::string(who) + ": expected 6 fields in '" + line + "'");
        DissectionTerm t;
        t.index = ++index;
        t.d = static_cast<int>(detail::parse_ll(f[0], who));
        t.scale = rat_from_string(detail::trim(f[1]));
        const detail::MultiplierField m = detail::parse_multiplier(f[2], who);
        t.has_A = m.has_A;
        t.ax = m.x;
        t.ay = m.y;
        t.az = m.z;
        t.qpow = detail::parse_ll(f[3], who);
        t.j = detail::parse_exponents(f[4], who);
        const std::string lam = detail::trim(f[5]);
        if (lam == "none") {
            t.lambert_k = 0;
        } else if (lam.rfind("L(", 0) == 0 && lam.back() == ')') {
            t.lambert_k = detail::parse_ll(lam.substr(2, lam.size() - 3), who);
            if (t.lambert_k < 1 || t.lambert_k > 6)
                throw std::invalid_argument(std::string(who) + ": bad Lambert index in '" + line + "'");
        } else {
            throw std::invalid_argument(std::string(who) + ": unknown Lambert field '" + lam + "'");
        }
        out.terms.push_back(std::move(t));
    }
    return out;
}

// structural invariants of the identity table: 62 rows; exponent sums 0 on
// plain rows and -1 on rows carrying a weight-1/2 mock factor; exactly the
// mock rows N7(2), N7(3), N7(1) and one multiplier-free M17 row
inline void validate_identity_terms(const std::vector<IdentityTerm>& ts) {
    static const char* who = "identity table";
    if (ts.size() != 62)
        throw std::invalid_argument(std::string(who) + ": expected 62 rows, found " + std::to_string(ts.size()));
    std::vector<long long> ks;
    int m17 = 0;
    for (const auto& t : ts) {
        long long wsum = 0;
        for (long long v : t.e) wsum += v;
        const long long expected = t.special == IdentityTerm::Special::None ? 0 : -1;
        if (wsum != expected)
            throw std::invalid_argument(std::string(who) + ": row " + std::to_string(t.index) +
                                        " is not weight balanced");
        if (t.scale == 0)
            throw std::invalid_argument(std::string(who) + ": row " + std::to_string(t.index) + " has zero scale");
        if (t.special == IdentityTerm::Special::N7) {
            ks.push_back(t.special_k);
            if (!t.has_A)
                throw std::invalid_argument(std::string(who) + ": N7 row " + std::to_string(t.index) +
                                            " lacks a multiplier");
        } else if (t.special == IdentityTerm::Special::M17) {
            ++m17;
            if (t.has_A)
                throw std::invalid_argument(std::string(who) + ": M17 row carries an unexpected multiplier");
        } else if (!t.has_A) {
            throw std::invalid_argument(std::string(who) + ": plain row " + std::to_string(t.index) +
                                        " lacks a multiplier");
        }
    }
    if (ks != std::vector<long long>{2, 3, 1})
        throw std::invalid_argument(std::string(who) + ": mock rows must be N7(2), N7(3), N7(1) in order");
    if (m17 != 1) throw std::invalid_argument(std::string(who) + ": expected exactly one M17 row");
}

// structural invariants of the dissection table: 58 rows split 8/7/11/8/7/8/9
// over the residues, and the three Lambert rows carry the 1/(J_0 J_7)
// prefactor with lead exponent d + 7 qpow = 7k - k^2
inline void validate_dissection_terms(const std::vector<DissectionTerm>& ts) {
    static const char* who = "dissection table";
    if (ts.size() != 58)
        throw std::invalid_argument(std::string(who) + ": expected 58 rows, found " + std::to_string(ts.size()));
    const std::array<int, 7> expected_counts = {8, 7, 11, 8, 7, 8, 9};
    std::array<int, 7> counts{};
    std::vector<std::array<long long, 2>> lambert;
    for (const auto& t : ts) {
        if (t.d < 0 || t.d > 6)
            throw std::invalid_argument(std::string(who) + ": row " + std::to_string(t.index) + " has residue " +
                                        std::to_string(t.d));
        if (t.scale == 0)
            throw std::invalid_argument(std::string(who) + ": row " + std::to_string(t.index) + " has zero scale");
        ++counts[static_cast<std::size_t>(t.d)];
        if (t.lambert_k != 0) {
            static const std::array<long long, 8> prefactor = {-1, 0, 0, 0, 0, 0, 0, -1};
            if (t.j != prefactor)
                throw std::invalid_argument(std::string(who) + ": Lambert row " + std::to_string(t.index) +
                                            " must carry exactly 1/(J_0 J_7)");
            if (t.d + 7 * t.qpow != 7 * t.lambert_k - t.lambert_k * t.lambert_k)
                throw std::invalid_argument(std::string(who) + ": Lambert row " + std::to_string(t.index) +
                                            " has the wrong lead exponent");
            lambert.push_back({t.d, t.lambert_k});
        }
    }
    if (counts != expected_counts)
        throw std::invalid_argument(std::string(who) + ": residue row counts are off");
    const std::vector<std::array<long long, 2>> expected_lambert = {{3, 2}, {5, 3}, {6, 1}};
    if (lambert != expected_lambert)
        throw std::invalid_argument(std::string(who) + ": Lambert rows must be (d,k) = (3,2), (5,3), (6,1)");
}

// embedded tables, parsed and validated once per process
inline const IdentityTable& identity_table() {
    static const IdentityTable table = [] {
        IdentityTable t = parse_identity_table(embedded::modular_terms);
        validate_identity_terms(t.terms);
        return t;
    }();
    return table;
}

inline const DissectionTable& dissection_table() {
    static const DissectionTable table = [] {
        DissectionTable t = parse_dissection_table(embedded::dissection_terms);
        validate_dissection_terms(t.terms);
        return t;
    }();
    return table;
}

// A(x,y,z) = x (w + w^6) + y (w^2 + w^5) + z (w^3 + w^4), w = zeta_7
inline CycloNumber A_value(const RingPtr& ring, long long x, long long y, long long z) {
    const long long comp[3] = {x, y, z};
    CycloNumber acc(ring);
    for (long long r = 1; r <= 3; ++r) {
        const CycloNumber u = root_of_unity(ring, make_rational(r, 7)) +
                              root_of_unity(ring, make_rational(-r, 7));
        acc += u * Rational(comp[r - 1]);
    }
    return acc;
}

/*
 * The two tables were transcribed independently but describe one object:
 * the plain dissection rows repeat, in order, the scale and multiplier of
 * the first 55 identity rows; the three Lambert rows repeat the next three,
 * and their k's match the mock rows' k sequence.
 */
inline bool tables_coherent(const std::vector<IdentityTerm>& id, const std::vector<DissectionTerm>& dis) {
    if (id.size() != 62 || dis.size() != 58) return false;
    std::size_t plain = 0, lam = 0;
    std::vector<long long> lambert_ks;
    for (const auto& t : dis) {
        const IdentityTerm* partner = nullptr;
        if (t.lambert_k == 0) {
            if (plain >= 55) return false;
            partner = &id[plain++];
        } else {
            if (lam >= 3) return false;
            partner = &id[55 + lam++];
            lambert_ks.push_back(t.lambert_k);
        }
        if (!partner->has_A || !t.has_A) return false;
        if (partner->scale != t.scale) return false;
        if (partner->ax != t.ax || partner->ay != t.ay || partner->az != t.az) return false;
    }
    if (plain != 55 || lam != 3) return false;
    std::vector<long long> mock_ks;
    for (const auto& t : id)
        if (t.special == IdentityTerm::Special::N7) mock_ks.push_back(t.special_k);
    return mock_ks == lambert_ks;
}

// ---------------------------------------------------------------------------
// mutations
// ---------------------------------------------------------------------------

/*
 * A mutation perturbs a single table row: rows carrying a multiplier get
 * x -> x + 1; the one row without a multiplier is dropped entirely.  Used
 * to demonstrate that the checks constrain every row they consume.
 */
struct Mutation {
    enum class Table { Identity, Dissection };
    Table table = Table::Identity;
    int index = 1;  // 1-based row number

    std::string to_string() const {
        return std::string(table == Table::Identity ? "identity" : "dissection") + ":" + std::to_string(index);
    }
};

inline std::vector<IdentityTerm> apply_mutation(std::vector<IdentityTerm> ts, int index) {
    if (index < 1 || index > static_cast<int>(ts.size()))
        throw std::invalid_argument("apply_mutation: row " + std::to_string(index) + " out of range");
    IdentityTerm& t = ts[static_cast<std::size_t>(index - 1)];
    if (t.has_A) {
        t.ax += 1;
    } else {
        ts.erase(ts.begin() + (index - 1));
    }
    return ts;
}

inline std::vector<DissectionTerm> apply_mutation(std::vector<DissectionTerm> ts, int index) {
    if (index < 1 || index > static_cast<int>(ts.size()))
        throw std::invalid_argument("apply_mutation: row " + std::to_string(index) + " out of range");
    DissectionTerm& t = ts[static_cast<std::size_t>(index - 1)];
    if (t.has_A) {
        t.ax += 1;
    } else {
        ts.erase(ts.begin() + (index - 1));
    }
    return ts;
}

// fixed demonstration set: a constant row, the two half-scale rows, two
// mid-table rows, a theta-partner row, one mock row, the multiplier-free
// row (dropped), and both ends of the dissection table
inline const std::array<Mutation, 10>& fixed_mutations() {
    static const std::array<Mutation, 10> list = {{
        {Mutation::Table::Identity, 1},
        {Mutation::Table::Identity, 5},
        {Mutation::Table::Identity, 21},
        {Mutation::Table::Identity, 24},
        {Mutation::Table::Identity, 30},
        {Mutation::Table::Identity, 44},
        {Mutation::Table::Identity, 59},
        {Mutation::Table::Identity, 62},
        {Mutation::Table::Dissection, 1},
        {Mutation::Table::Dissection, 58},
    }};
    return list;
}

// ---------------------------------------------------------------------------
// expansion of the identity
// ---------------------------------------------------------------------------

namespace detail {

// process-wide memo for expensive series; values are pure functions of the
// key, so concurrent recomputation is wasteful but harmless
inline std::map<std::string, QSeries>& series_memo() {
    static std::map<std::string, QSeries> memo;
    return memo;
}
inline std::mutex& series_memo_mutex() {
    static std::mutex mu;
    return mu;
}

template <class Fn>
inline QSeries memoized_series(const std::string& key, Fn&& build) {
    {
        std::lock_guard<std::mutex> lock(series_memo_mutex());
        auto it = series_memo().find(key);
        if (it != series_memo().end()) return it->second;
    }
    QSeries s = build();
    std::lock_guard<std::mutex> lock(series_memo_mutex());
    return series_memo().emplace(key, std::move(s)).first->second;
}

// leading exponents of the eight basis factors:
// eta(98 t) leads at 98/24; f(98, 7k) leads at (7-k)^2/4
inline Rational identity_factor_lead(int i) {
    if (i == 0) return make_rational(98, 24);
    return make_rational((7 - i) * (7 - i), 4);
}

inline QSeries identity_factor(int i, const Rational& T) {
    return memoized_series("F" + std::to_string(i) + "@" + rat_to_string(T), [&]() -> QSeries {
        const RingPtr ring = cyclo_ring(kIdentityConductor);
        if (i == 0) return eta_series(ring, kIdentityGrid, 98, T);
        return fNrho_series(ring, kIdentityGrid, 98, 7 * i, T);
    });
}

// unscaled series of one identity row: the factor product together with its
// mock companion (i * N7_series(k) or the M17 combination), but without the
// scale * A(x,y,z) multiplier, so that multiplier perturbations re-use it
inline QSeries identity_term_shape(const IdentityTerm& t, const Rational& Tbuild) {
    return memoized_series(t.shape_key() + "@" + rat_to_string(Tbuild), [&]() -> QSeries {
        const RingPtr ring = cyclo_ring(kIdentityConductor);
        QSeries acc = QSeries::one(ring, kIdentityGrid, Tbuild);
        QSeries den = QSeries::one(ring, kIdentityGrid, Tbuild);
        bool have_den = false;
        for (int i = 0; i < 8; ++i) {
            if (t.e[i] > 0) {
                acc = acc * identity_factor(i, Tbuild).powed(t.e[i]);
            } else if (t.e[i] < 0) {
                den = den * identity_factor(i, Tbuild).powed(-t.e[i]);
                have_den = true;
            }
        }
        if (have_den) acc = acc * den.inverted();
        if (t.special == IdentityTerm::Special::N7)
            acc = acc * N7_series(ring, kIdentityGrid, t.special_k, Tbuild)
                            .scaled(root_of_unity(ring, make_rational(1, 4)));
        else if (t.special == IdentityTerm::Special::M17)
            acc = acc * scriptM_series(ring, kIdentityGrid, 1, 7, Tbuild);
        return acc;
    });
}

}  // namespace detail

/*
 * Exact q-expansion of the summed identity below the horizon T.  Factors
 * are built with enough headroom that the pessimistic truncation tracking
 * still certifies every exponent below T: inverting a denominator of lead L
 * costs 2L of horizon, so the build horizon adds twice the worst
 * denominator lead (plus slack for the negative mock leads).  A residual
 * shortfall -- impossible for the shipped table -- throws.
 */
inline QSeries expand_identity(const std::vector<IdentityTerm>& terms, const Rational& T, int jobs = 1) {
    const RingPtr ring = cyclo_ring(kIdentityConductor);
    Rational worst(0);
    for (const auto& t : terms) {
        Rational den_lead(0);
        for (int i = 0; i < 8; ++i)
            if (t.e[i] < 0) den_lead += Rational(-t.e[i]) * detail::identity_factor_lead(i);
        worst = std::max(worst, den_lead);
    }
    const Rational Tbuild = T + Rational(2) * worst + Rational(14);

    std::vector<QSeries> slot(terms.size());
    std::vector<std::string> errors(terms.size());
    parallel_for(terms.size(), static_cast<unsigned>(jobs < 1 ? 1 : jobs), [&](std::size_t i) {
        try {
            const IdentityTerm& t = terms[i];
            CycloNumber c(ring, t.scale);
            if (t.has_A) c *= A_value(ring, t.ax, t.ay, t.az);
            slot[i] = detail::identity_term_shape(t, Tbuild).scaled(c);
        } catch (const std::exception& ex) {
            errors[i] = ex.what();
        }
    });
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (!errors[i].empty())
            throw std::runtime_error("expand_identity: row " + std::to_string(terms[i].index) + ": " + errors[i]);
        if (slot[i].truncation() < T)
            throw std::runtime_error("expand_identity: truncation shortfall on row " +
                                     std::to_string(terms[i].index));
    }

    QSeries sum = QSeries::zero(ring, kIdentityGrid, Tbuild);
    for (const auto& s : slot) sum = sum + s;
    return sum.truncated(T);
}

// ---------------------------------------------------------------------------
// cusp budget for the identity
// ---------------------------------------------------------------------------

inline const std::vector<CuspClass>& identity_cusp_classes() {
    static const std::vector<CuspClass> classes = cusp_representatives(GroupSpec::parse("G0(98)&G1(14)"));
    return classes;
}

// order-bound descriptors for each row: the eta/theta factors carry exact
// cusp orders; a mock companion appends its one-sided bound, and the M17
// row is the minimum over its P- and N-part monomials
inline std::vector<BoundedTerm> identity_bounded_terms(const std::vector<IdentityTerm>& terms) {
    std::vector<BoundedTerm> out;
    out.reserve(terms.size());
    for (const auto& t : terms) {
        TermMonomial base;
        if (t.e[0] != 0) base.push_back({TermDescriptor::eta(98), t.e[0]});
        for (int k = 1; k <= 7; ++k)
            if (t.e[k] != 0) base.push_back({TermDescriptor::theta_f(98, 7 * k), t.e[k]});
        BoundedTerm bt;
        bt.label = t.label();
        if (t.special == IdentityTerm::Special::N7) {
            TermMonomial mono = base;
            mono.push_back({TermDescriptor::m_holo(t.special_k, 7, 98), 1});
            bt.monomials.push_back(std::move(mono));
        } else if (t.special == IdentityTerm::Special::M17) {
            TermMonomial mp = base;
            mp.push_back({TermDescriptor::p(1, 7), 1});
            TermMonomial mn = base;
            mn.push_back({TermDescriptor::n_holo(1, 7), 1});
            bt.monomials.push_back(std::move(mp));
            bt.monomials.push_back(std::move(mn));
        } else {
            bt.monomials.push_back(std::move(base));
        }
        out.push_back(std::move(bt));
    }
    return out;
}

// ---------------------------------------------------------------------------
// certificate
// ---------------------------------------------------------------------------

struct CertificateCusp {
    Cusp cusp;
    long long width = 0;
    Rational bound;              // lower bound for every term's order at this cusp
    std::string limiting_term;   // label of a row attaining the bound
    bool bound_limited = false;  // the minimum came from a one-sided bound, not an exact order
};

struct Certificate {
    std::string group;
    std::vector<CertificateCusp> cusps;  // non-infinite classes only
    Rational budget;                     // sum over rows of width * bound
    int conductor = kIdentityConductor;
    int D = kIdentityGrid;
    long long V = -1;   // expansion verified zero for all exponents <= V
    std::string verdict;  // "proven" | "violated" | "inconclusive"
    std::string digest;   // checksum of the payload fields above
    std::string engine = kEngineVersion;
    std::string reason;   // non-empty for non-proven verdicts

    // exponent of the first nonzero coefficient (verdict "violated" only);
    // informational, not part of the serialized payload
    std::optional<Rational> first_nonzero;

    nlohmann::ordered_json to_json() const;
    static Certificate from_json(const nlohmann::ordered_json& j);
};

// canonical payload: everything the verdict depends on, in fixed key order
inline nlohmann::ordered_json certificate_payload(const Certificate& c) {
    nlohmann::ordered_json j;
    j["group"] = c.group;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : c.cusps) {
        nlohmann::ordered_json row;
        row["cusp"] = r.cusp.to_string();
        row["width"] = r.width;
        row["bound"] = rat_to_string(r.bound);
        row["limiting_term"] = r.limiting_term;
        row["bound_limited"] = r.bound_limited;
        rows.push_back(std::move(row));
    }
    j["cusps"] = std::move(rows);
    j["budget"] = rat_to_string(c.budget);
    j["conductor"] = c.conductor;
    j["D"] = c.D;
    j["V"] = c.V;
    j["verdict"] = c.verdict;
    return j;
}

inline std::string certificate_digest(const Certificate& c) {
    return hex64(fnv1a(certificate_payload(c).dump()));
}

inline nlohmann::ordered_json Certificate::to_json() const {
    nlohmann::ordered_json j = certificate_payload(*this);
    j["digest"] = digest;
    j["engine"] = engine;
    if (!reason.empty()) j["reason"] = reason;
    return j;
}

inline Certificate Certificate::from_json(const nlohmann::ordered_json& j) {
    Certificate c;
    c.group = j.at("group").get<std::string>();
    for (const auto& row : j.at("cusps")) {
        CertificateCusp r;
        r.cusp = Cusp::parse(row.at("cusp").get<std::string>());
        r.width = row.at("width").get<long long>();
        r.bound = rat_from_string(row.at("bound").get<std::string>());
        r.limiting_term = row.at("limiting_term").get<std::string>();
        r.bound_limited = row.at("bound_limited").get<bool>();
        c.cusps.push_back(std::move(r));
    }
    c.budget = rat_from_string(j.at("budget").get<std::string>());
    c.conductor = j.at("conductor").get<int>();
    c.D = j.at("D").get<int>();
    c.V = j.at("V").get<long long>();
    c.verdict = j.at("verdict").get<std::string>();
    c.digest = j.at("digest").get<std::string>();
    if (j.contains("engine")) c.engine = j.at("engine").get<std::string>();
    if (j.contains("reason")) c.reason = j.at("reason").get<std::string>();
    const std::string expect = certificate_digest(c);
    if (c.digest != expect)
        throw std::invalid_argument("certificate digest mismatch (declared " + c.digest +
                                    ", recomputed " + expect + ")");
    return c;
}

// ---------------------------------------------------------------------------
// verify_mod7
// ---------------------------------------------------------------------------

struct VerifyOptions {
    Rational precision = Rational(130);  // expansion horizon T
    int jobs = 1;
    std::optional<Mutation> mutation;
    bool use_cache = true;  // consult QDISSECT_CACHE when the variable is set
};

namespace detail {

inline std::optional<std::string> cache_directory() {
    const char* env = std::getenv("QDISSECT_CACHE");
    if (!env || !*env) return std::nullopt;
    return std::string(env);
}

// expansion with an optional on-disk memo: the stored series is keyed by
// engine version, table digest, horizon and mutation, so stale or foreign
// entries can never be mistaken for the requested expansion
inline QSeries cached_expansion(const std::vector<IdentityTerm>& terms, const VerifyOptions& opt) {
    const std::optional<std::string> dir = opt.use_cache ? cache_directory() : std::nullopt;
    std::filesystem::path path;
    if (dir) {
        const std::string tag = std::string(kEngineVersion) + "|" + identity_table().digest +
                                "|T=" + rat_to_string(opt.precision) +
                                "|mut=" + (opt.mutation ? opt.mutation->to_string() : "none");
        path = std::filesystem::path(*dir) / ("expansion-" + hex64(fnv1a(tag)) + ".txt");
        std::ifstream in(path);
        if (in) {
            std::stringstream buf;
            buf << in.rdbuf();
            try {
                QSeries s = QSeries::from_text(buf.str());
                if (s.ring()->conductor() == kIdentityConductor && s.grid() == kIdentityGrid &&
                    s.truncation() >= opt.precision)
                    return s.truncated(opt.precision);
            } catch (const std::exception&) {
                // unreadable entry: fall through and recompute
            }
        }
    }
    QSeries s = expand_identity(terms, opt.precision, opt.jobs);
    if (dir) {
        std::error_code ec;
        std::filesystem::create_directories(*dir, ec);
        if (!ec) {
            std::ofstream out(path);
            out << s.to_text();
        }
    }
    return s;
}

}  // namespace detail

/*
 * Full verification run.  The verdict is a pure function of the term table,
 * the group and the horizon:
 *
 *   - "violated" when some coefficient below T is nonzero;
 *   - "proven" when all of them vanish and V + budget > 0, V being the
 *     largest integer with everything at exponent <= V verified zero (a
 *     nonzero weight-zero form would need order at most -budget at
 *     infinity, and V + budget > 0 pushes the order past that);
 *   - "inconclusive" otherwise (horizon too small, or the expansion failed).
 */
inline Certificate verify_mod7(const VerifyOptions& opt = {}) {
    Certificate cert;
    cert.group = "G0(98)&G1(14)";

    std::vector<IdentityTerm> terms = identity_table().terms;
    if (opt.mutation && opt.mutation->table == Mutation::Table::Identity)
        terms = apply_mutation(std::move(terms), opt.mutation->index);

    const std::vector<BoundedTerm> bounded = identity_bounded_terms(terms);
    const ValenceBudget vb = valence_budget(identity_cusp_classes(), bounded, opt.jobs);
    cert.budget = vb.total;
    cert.cusps.reserve(vb.cusps.size());
    for (const auto& row : vb.cusps) {
        CertificateCusp r;
        r.cusp = row.cusp;
        r.width = row.width;
        r.bound = row.bound;
        r.limiting_term = bounded[row.limiting_term].label;
        r.bound_limited = !row.exact;
        cert.cusps.push_back(std::move(r));
    }

    QSeries sum;
    try {
        sum = detail::cached_expansion(terms, opt);
    } catch (const std::exception& ex) {
        cert.verdict = "inconclusive";
        cert.reason = std::string("expansion failed: ") + ex.what();
        cert.digest = certificate_digest(cert);
        return cert;
    }

    if (!sum.is_zero_series()) {
        const Rational e0 = sum.lead_exponent();
        cert.first_nonzero = e0;
        // all grid exponents below e0 were verified zero
        cert.V = (rat_den(e0) == 1 ? rfloor(e0) - 1 : rfloor(e0)).convert_to<long long>();
        cert.verdict = "violated";
        cert.reason = "nonzero coefficient at q^(" + rat_to_string(e0) + ")";
    } else {
        cert.V = (rceil(sum.truncation()) - 1).convert_to<long long>();
        if (Rational(cert.V) + cert.budget > 0) {
            cert.verdict = "proven";
        } else {
            cert.verdict = "inconclusive";
            cert.reason = "insufficient horizon: V=" + std::to_string(cert.V) +
                          ", budget=" + rat_to_string(cert.budget) + ", need V + budget > 0";
        }
    }
    cert.digest = certificate_digest(cert);
    return cert;
}

// ---------------------------------------------------------------------------
// dissection check
// ---------------------------------------------------------------------------

namespace detail {

// J-factors in the dissection variable on the integer exponent grid;
// jacprod covers a = 7 too: (x^7; x^14)(x^{14-7}; x^14) = (x^7; x^14)^2
inline QSeries dissection_factor(int a, const Rational& T) {
    return memoized_series("J" + std::to_string(a) + "@" + rat_to_string(T), [&]() -> QSeries {
        const RingPtr ring = cyclo_ring(kIdentityConductor);
        const CycloNumber one(ring, 1);
        if (a == 0) return pochhammer_series(ring, 1, one, Rational(14), Rational(14), T);
        return jacprod_series(ring, 1, one, Rational(a), Rational(14), T);
    });
}

// bilateral Lambert sum L(k) = sum_{n in Z} (-1)^n x^{7n(n+1)} / (1 - x^{7n+k}),
// the n <= -1 half rewritten through 1/(1 - x^{-s}) = 1 - 1/(1 - x^s)
inline QSeries dissection_lambert(long long k, const Rational& T) {
    return memoized_series("L" + std::to_string(k) + "@" + rat_to_string(T), [&]() -> QSeries {
        const RingPtr ring = cyclo_ring(kIdentityConductor);
        const CycloNumber one(ring, 1);
        QSeries sum = QSeries::zero(ring, 1, T);
        auto add_term = [&](long long n) {
            const Rational e(7 * n * (n + 1));
            if (e >= T) return;
            const long long s = 7 * n + k;
            const Rational Tn = T - e;
            QSeries lam;
            if (s > 0)
                lam = geometric_series(ring, 1, one, Rational(s), Tn);
            else
                lam = QSeries::one(ring, 1, Tn) - geometric_series(ring, 1, one, Rational(-s), Tn);
            if (mod_norm(n, 2) == 1) lam = -lam;
            sum = sum + lam.shifted(e);
        };
        for (long long n = 0; Rational(7 * n * (n + 1)) < T; ++n) add_term(n);
        for (long long n = -1; Rational(7 * n * (n + 1)) < T; --n) add_term(n);
        return sum;
    });
}

/*
 * One dissection row as a series in the dissection variable.  `component`
 * selects the coefficient: 0 takes the full scale * A(x,y,z) (or scale
 * alone for a multiplier-free row); 1, 2, 3 take the single rational
 * component scale * x, scale * y, scale * z (a multiplier-free row's
 * constant 1 = -(u_1 + u_2 + u_3) contributes -scale to each component).
 */
inline QSeries dissection_row_series(const DissectionTerm& t, const Rational& T, int component = 0) {
    const RingPtr ring = cyclo_ring(kIdentityConductor);
    QSeries acc = QSeries::one(ring, 1, T);
    for (int a = 0; a < 8; ++a)
        if (t.j[a] != 0) acc = acc * dissection_factor(a, T).powed(t.j[a]);
    if (t.lambert_k != 0) acc = acc * dissection_lambert(t.lambert_k, T);
    if (t.qpow != 0) acc = acc.shifted(Rational(t.qpow)).truncated(T);
    CycloNumber c(ring, t.scale);
    if (component == 0) {
        if (t.has_A) c *= A_value(ring, t.ax, t.ay, t.az);
    } else {
        const long long comp[3] = {t.ax, t.ay, t.az};
        c *= Rational(t.has_A ? comp[component - 1] : -1);
    }
    return acc.scaled(c);
}

// solve c = t1 u1 + t2 u2 + t3 u3 exactly over Q; nullopt when c lies
// outside the span of the u's
inline std::optional<std::array<Rational, 3>> solve_on_pair_basis(const std::array<CycloNumber, 3>& u,
                                                                  const CycloNumber& c) {
    const std::size_t rows = c.coeffs().size();
    std::vector<std::array<Rational, 4>> m(rows);
    for (std::size_t i = 0; i < rows; ++i)
        m[i] = {u[0].coeffs()[i], u[1].coeffs()[i], u[2].coeffs()[i], c.coeffs()[i]};
    std::size_t lead = 0;
    int pivot_row[3] = {-1, -1, -1};
    for (int col = 0; col < 3 && lead < rows; ++col) {
        std::size_t p = lead;
        while (p < rows && m[p][static_cast<std::size_t>(col)] == 0) ++p;
        if (p == rows) continue;
        std::swap(m[p], m[lead]);
        for (std::size_t i = 0; i < rows; ++i) {
            if (i == lead || m[i][static_cast<std::size_t>(col)] == 0) continue;
            const Rational f = m[i][static_cast<std::size_t>(col)] / m[lead][static_cast<std::size_t>(col)];
            for (int j = col; j < 4; ++j)
                m[i][static_cast<std::size_t>(j)] -= f * m[lead][static_cast<std::size_t>(j)];
        }
        pivot_row[col] = static_cast<int>(lead);
        ++lead;
    }
    std::array<Rational, 3> t{};
    for (int col = 0; col < 3; ++col) {
        if (pivot_row[col] < 0) return std::nullopt;
        const auto& row = m[static_cast<std::size_t>(pivot_row[col])];
        t[static_cast<std::size_t>(col)] = row[3] / row[static_cast<std::size_t>(col)];
    }
    for (std::size_t i = lead; i < rows; ++i)
        if (m[i][3] != 0) return std::nullopt;
    return t;
}

}  // namespace detail

struct DissectionOptions {
    long long horizon = 150;           // compare the assembled sum through q^horizon
    long long closed_form_depth = 20;  // depth of the first rank-difference closed form
    int jobs = 1;
    std::optional<Mutation> mutation;
};

struct DissectionReport {
    long long horizon = 0;
    bool series_match = false;               // assembled table == O(zeta_7; tau)
    std::optional<Rational> first_mismatch;  // exponent, when series_match fails
    bool extraction_ok = false;              // R_{r,0}(d) recovered from the table == rank tabulation
    bool closed_form_ok = false;             // residue-0 x-components == R_{1,0}(0; q)
    bool constant_ok = false;                // that closed form starts with -1

    bool ok() const { return series_match && extraction_ok && closed_form_ok && constant_ok; }
};

/*
 * Dissection check: build each residue series R_d in the dissection
 * variable from the table, assemble sum_d q^d R_d(q^7), and compare with
 * the exact expansion of O(zeta_7; tau).  Then split each R_d coefficient
 * over the pair basis u_r = w^r + w^{-r} and compare the three rational
 * series with the rank differences R_{r,0}(d; q) tabulated directly from
 * the recurrence; the residue-0 x-component series is additionally matched
 * against R_{1,0}(0; q) and must start with constant -1.
 */
inline DissectionReport dissection_check(const DissectionOptions& opt = {}) {
    DissectionReport rep;
    rep.horizon = opt.horizon;
    const RingPtr ring = cyclo_ring(kIdentityConductor);
    const long long N = opt.horizon;
    if (N < 7) throw std::invalid_argument("dissection_check: horizon too small");

    std::vector<DissectionTerm> terms = dissection_table().terms;
    if (opt.mutation && opt.mutation->table == Mutation::Table::Dissection)
        terms = apply_mutation(std::move(terms), opt.mutation->index);

    // residue series in the dissection variable
    const Rational Tx(N / 7 + 2);
    std::array<QSeries, 7> R;
    for (auto& r : R) r = QSeries::zero(ring, 1, Tx);
    for (const auto& t : terms)
        R[static_cast<std::size_t>(t.d)] = R[static_cast<std::size_t>(t.d)] + detail::dissection_row_series(t, Tx);

    // assembled sum against the generating function
    QSeries rhs = QSeries::zero(ring, 1, Rational(7) * Tx);
    for (int d = 0; d < 7; ++d)
        rhs = rhs + R[static_cast<std::size_t>(d)].stretched(7).shifted(Rational(d)).truncated(Rational(7) * Tx);
    const QSeries lhs = O_at_root(1, 7, ring, Rational(N + 1));
    const QSeries diff = lhs - rhs;
    if (diff.truncation() < Rational(N + 1))
        throw std::logic_error("dissection_check: assembled horizon fell short");
    rep.series_match = diff.is_zero_series();
    if (!rep.series_match) rep.first_mismatch = diff.lead_exponent();

    // rank tabulation deep enough for every residue and the closed form
    const RankTable table(static_cast<int>(N));
    std::array<CycloNumber, 3> u;
    for (long long r = 1; r <= 3; ++r)
        u[static_cast<std::size_t>(r - 1)] =
            root_of_unity(ring, make_rational(r, 7)) + root_of_unity(ring, make_rational(-r, 7));

    rep.extraction_ok = true;
    for (int d = 0; d < 7 && rep.extraction_ok; ++d) {
        const long long depth = (N - d) / 7 + 1;
        std::array<QSeries, 3> direct;
        for (long long r = 1; r <= 3; ++r)
            direct[static_cast<std::size_t>(r - 1)] =
                rank_difference_series(table, r, 0, d, ring, Rational(depth));
        for (long long n = 0; n < depth && Rational(n) < Tx; ++n) {
            const CycloNumber c = R[static_cast<std::size_t>(d)].coeff_int(n);
            const auto split = detail::solve_on_pair_basis(u, c);
            if (!split) {
                rep.extraction_ok = false;
                break;
            }
            for (std::size_t r = 0; r < 3; ++r) {
                const CycloNumber want = direct[r].coeff_int(n);
                if (!(CycloNumber(ring, (*split)[r]) - want).is_zero()) {
                    rep.extraction_ok = false;
                    break;
                }
            }
            if (!rep.extraction_ok) break;
        }
    }

    // first rank-difference closed form from the residue-0 x-components
    const Rational Tcf = std::min(Tx, Rational(opt.closed_form_depth + 1));
    QSeries closed = QSeries::zero(ring, 1, Tcf);
    for (const auto& t : terms)
        if (t.d == 0) closed = closed + detail::dissection_row_series(t, Tcf, 1);
    const QSeries direct10 = rank_difference_series(table, 1, 0, 0, ring, Tcf);
    rep.closed_form_ok = (closed - direct10).is_zero_series();
    rep.constant_ok =
        !closed.is_zero_series() && (closed.coeff_int(0) - CycloNumber(ring, Rational(-1))).is_zero();
    return rep;
}

// ---------------------------------------------------------------------------
// cancellation of the completion tails
// ---------------------------------------------------------------------------

struct NonholoReport {
    long long n_max = 0;
    bool ok = false;
    long long first_failure = 0;  // smallest failing theta index; 0 when none
};

/*
 * The four rows carrying mock pieces share one factor monomial, so the
 * cancellation of their completion tails divides down to
 *
 *   sum_k scale_k A_k i c_{N7(k)}(n) + scale_M c_{M17}(n) = 0
 *
 * for every theta index n >= 1, with c the tail coefficients.  This is the
 * piece of the construction that makes the holomorphic identity possible,
 * checked exactly in Q(zeta_28).
 */
inline NonholoReport nonholo_cancellation(long long n_max = 50) {
    NonholoReport rep;
    rep.n_max = n_max;
    const RingPtr ring = cyclo_ring(kIdentityConductor);
    const CycloNumber iu = root_of_unity(ring, make_rational(1, 4));

    const std::vector<IdentityTerm>& terms = identity_table().terms;
    std::vector<const IdentityTerm*> specials;
    for (const auto& t : terms)
        if (t.special != IdentityTerm::Special::None) specials.push_back(&t);
    if (specials.empty()) throw std::logic_error("nonholo_cancellation: no mock rows");
    for (const auto* t : specials)
        if (t->e != specials.front()->e)
            throw std::logic_error("nonholo_cancellation: mock rows do not share a monomial");

    rep.ok = true;
    for (long long n = 1; n <= n_max; ++n) {
        CycloNumber residual(ring);
        for (const auto* t : specials) {
            CycloNumber w(ring, t->scale);
            if (t->has_A) w *= A_value(ring, t->ax, t->ay, t->az);
            if (t->special == IdentityTerm::Special::N7)
                residual += w * iu * nonholo_coeff(ring, NonholoKind::n7(t->special_k), n).weight;
            else
                residual += w * nonholo_coeff(ring, NonholoKind::m17(), n).weight;
        }
        if (!residual.is_zero()) {
            rep.ok = false;
            rep.first_failure = n;
            break;
        }
    }
    return rep;
}

}  // namespace qdissect
