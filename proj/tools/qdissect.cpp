/*
 * qdissect — command line front end for the exact q-series engine.
 *
 * Subcommands:
 *   verify   run the 62-term vanishing check and emit a certificate
 *   dissect  assemble the residue dissection and compare it to the
 *            root-of-unity generating function
 *   ranks    tabulate overpartition rank counts / rank-difference series
 *   cusps    enumerate cusp classes and widths of a congruence group
 *   series   print a named q-series expansion
 *   eval     numerically evaluate a named q-series in the upper half plane
 *
 * Exit codes (the machine contract):
 *   0  success / identity proven
 *   1  identity violated (a nonzero coefficient or table mismatch was found)
 *   2  inconclusive (expansion horizon does not clear the valence budget)
 *   3  usage, parse, or I/O error
 *
 * Output is byte-for-byte deterministic except for the generated_at field
 * in JSON outputs, which --deterministic suppresses.
 */

#include <CLI11.hpp>

#include <complex>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "qdissect/verifier.hpp"

namespace {

using namespace qdissect;

constexpr int kExitOk = 0;
constexpr int kExitViolated = 1;
constexpr int kExitInconclusive = 2;
constexpr int kExitError = 3;

struct GlobalOptions {
    int jobs = 1;
    bool deterministic = false;
    std::string output;  // empty = stdout
};

std::string utc_timestamp() {
    char buf[32];
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void stamp(nlohmann::ordered_json& j, const GlobalOptions& g) {
    if (!g.deterministic) j["generated_at"] = utc_timestamp();
}

// Writes to the chosen output path, or stdout when no path was given.
void emit(const std::string& text, const GlobalOptions& g) {
    if (g.output.empty()) {
        std::cout << text;
        if (text.empty() || text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(g.output, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file '" + g.output + "'");
    out << text;
    if (text.empty() || text.back() != '\n') out << '\n';
    if (!out) throw std::runtime_error("write failed on '" + g.output + "'");
}

// ---------------------------------------------------------------------------
// named series mini-language for `series` and `eval`
// ---------------------------------------------------------------------------

// Accepted names: eta(m), f(N,rho), poch(a,b), jacprod(a,b), L(k), N7(k),
// P(a,c), M17, O7.  Conductor/grid defaults follow the builder's needs and
// can be overridden.
QSeries build_named_series(const std::string& name, const Rational& T,
                           std::optional<int> conductor, std::optional<int> grid) {
    const auto open = name.find('(');
    std::string head = name.substr(0, open == std::string::npos ? name.size() : open);
    std::vector<long long> args;
    if (open != std::string::npos) {
        if (name.back() != ')') throw std::invalid_argument("series name: missing ')' in '" + name + "'");
        std::string inner = name.substr(open + 1, name.size() - open - 2);
        std::istringstream in(inner);
        std::string piece;
        while (std::getline(in, piece, ','))
            args.push_back(detail::parse_ll(piece, "series name"));
    }
    auto want = [&](std::size_t n) {
        if (args.size() != n)
            throw std::invalid_argument("series name '" + head + "' expects " + std::to_string(n) +
                                        " argument(s)");
    };
    auto ring_of = [&](int dflt) { return cyclo_ring(conductor.value_or(dflt)); };
    auto grid_of = [&](int dflt) { return grid.value_or(dflt); };

    if (head == "eta") {
        want(1);
        return eta_series(ring_of(1), grid_of(24), args[0], T);
    }
    if (head == "f") {
        want(2);
        return fNrho_series(ring_of(1), grid_of(static_cast<int>(8 * args[0])), args[0], args[1], T);
    }
    if (head == "poch") {
        want(2);
        const RingPtr r = ring_of(1);
        return pochhammer_series(r, grid_of(1), CycloNumber::from_coeffs(r, {Rational(1)}),
                                 Rational(args[0]), Rational(args[1]), T);
    }
    if (head == "jacprod") {
        want(2);
        const RingPtr r = ring_of(1);
        return jacprod_series(r, grid_of(1), CycloNumber::from_coeffs(r, {Rational(1)}),
                              Rational(args[0]), Rational(args[1]), T);
    }
    if (head == "L") {
        want(1);
        return lambert_N7_series(ring_of(1), grid_of(1), args[0], T);
    }
    if (head == "N7") {
        want(1);
        return N7_series(ring_of(28), grid_of(24), args[0], T);
    }
    if (head == "P") {
        want(2);
        return P_series(ring_of(28), grid_of(24), args[0], args[1], T);
    }
    if (head == "M17") {
        want(0);
        return scriptM_series(ring_of(28), grid_of(24), 1, 7, T);
    }
    if (head == "O7") {
        want(0);
        return O_at_root(1, 7, ring_of(7), T);
    }
    throw std::invalid_argument("unknown series name '" + name + "' (try eta(98), f(98,7), "
                                "poch(1,1), jacprod(1,14), L(2), N7(2), P(1,7), M17, O7)");
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

int cmd_verify(const GlobalOptions& g, long long precision, int mutate_term, bool no_cache,
               const std::string& format) {
    VerifyOptions opt;
    opt.precision = Rational(precision);
    opt.jobs = g.jobs;
    opt.use_cache = !no_cache;
    if (mutate_term > 0) opt.mutation = Mutation{Mutation::Table::Identity, mutate_term};

    const Certificate cert = verify_mod7(opt);

    if (format == "json") {
        nlohmann::ordered_json j = cert.to_json();
        stamp(j, g);
        emit(j.dump(2), g);
    } else {
        std::ostringstream out;
        out << "group:   " << cert.group << "\n"
            << "cusps:   " << cert.cusps.size() << " non-infinite classes\n"
            << "budget:  " << rat_to_string(cert.budget) << "\n"
            << "V:       " << cert.V << "\n"
            << "verdict: " << cert.verdict << "\n"
            << "digest:  " << cert.digest << "\n";
        if (!cert.reason.empty()) out << "reason:  " << cert.reason << "\n";
        emit(out.str(), g);
    }

    if (cert.verdict == "proven") return kExitOk;
    if (cert.verdict == "violated") return kExitViolated;
    return kExitInconclusive;
}

// ---------------------------------------------------------------------------
// dissect
// ---------------------------------------------------------------------------

int cmd_dissect(const GlobalOptions& g, long long horizon, long long depth, int mutate_term,
                const std::string& format) {
    DissectionOptions opt;
    opt.horizon = horizon;
    opt.closed_form_depth = depth;
    opt.jobs = g.jobs;
    if (mutate_term > 0) opt.mutation = Mutation{Mutation::Table::Dissection, mutate_term};

    const DissectionReport rep = dissection_check(opt);

    if (format == "json") {
        nlohmann::ordered_json j;
        j["horizon"] = rep.horizon;
        j["series_match"] = rep.series_match;
        if (rep.first_mismatch) j["first_mismatch"] = rat_to_string(*rep.first_mismatch);
        j["extraction_ok"] = rep.extraction_ok;
        j["closed_form_ok"] = rep.closed_form_ok;
        j["constant_ok"] = rep.constant_ok;
        j["ok"] = rep.ok();
        stamp(j, g);
        emit(j.dump(2), g);
    } else {
        std::ostringstream out;
        out << "horizon:        " << rep.horizon << "\n"
            << "series match:   " << (rep.series_match ? "yes" : "no") << "\n";
        if (rep.first_mismatch)
            out << "first mismatch: q^(" << rat_to_string(*rep.first_mismatch) << ")\n";
        out << "extraction:     " << (rep.extraction_ok ? "ok" : "FAILED") << "\n"
            << "closed form:    " << (rep.closed_form_ok ? "ok" : "FAILED") << "\n"
            << "constant -1:    " << (rep.constant_ok ? "ok" : "FAILED") << "\n"
            << "result:         " << (rep.ok() ? "ok" : "MISMATCH") << "\n";
        emit(out.str(), g);
    }
    return rep.ok() ? kExitOk : kExitViolated;
}

// ---------------------------------------------------------------------------
// ranks
// ---------------------------------------------------------------------------

int cmd_ranks(const GlobalOptions& g, long long n, const std::string& diff, long long terms,
              const std::string& format) {
    std::ostringstream out;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();

    if (!diff.empty()) {
        // rank-difference series R_{r,s}(d; q), `terms` coefficients
        const std::vector<std::string> parts = detail::split_on(diff, ',');
        if (parts.size() != 3)
            throw std::invalid_argument("--diff expects r,s,d (e.g. --diff 1,0,0)");
        const long long r = detail::parse_ll(parts[0], "--diff");
        const long long s = detail::parse_ll(parts[1], "--diff");
        const long long d = detail::parse_ll(parts[2], "--diff");
        const long long need = 7 * (terms - 1) + d;  // deepest count consulted
        if (need > kEnumerationCap)
            throw std::invalid_argument("ranks: --diff at " + std::to_string(terms) +
                                        " terms needs counts to n = " + std::to_string(need) +
                                        ", past the cap of " + std::to_string(kEnumerationCap));
        const RankTable table(need);
        const QSeries R =
            rank_difference_series(table, r, s, d, cyclo_ring(1), Rational(terms));
        out << "exponent,coefficient\n";
        for (long long e = 0; e < terms; ++e) {
            const std::string c = rat_to_string(R.coeff(Rational(e)).to_rational());
            out << e << "," << c << "\n";
            rows.push_back({e, c});
        }
    } else {
        // full count table through n: totals, rank counts, residue counts
        if (n > kEnumerationCap)
            throw std::invalid_argument("ranks: --n " + std::to_string(n) +
                                        " exceeds the cap of " + std::to_string(kEnumerationCap));
        const RankTable table(n);
        out << "n,label,count\n";
        auto push = [&](long long nn, const std::string& label, const Int& c) {
            out << nn << "," << label << "," << c.str() << "\n";
            rows.push_back({nn, label, c.str()});
        };
        for (long long nn = 0; nn <= n; ++nn) {
            push(nn, "total", table.total(nn));
            for (long long m = -nn; m <= nn; ++m) {
                const Int c = table.count(m, nn);
                if (c != 0) push(nn, "rank " + std::to_string(m), c);
            }
            for (long long k = 0; k < 7; ++k)
                push(nn, "rank " + std::to_string(k) + " mod 7", table.count_mod(k, 7, nn));
        }
    }

    if (format == "json") {
        nlohmann::ordered_json j;
        j["rows"] = rows;
        stamp(j, g);
        emit(j.dump(2), g);
    } else {
        emit(out.str(), g);
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// cusps
// ---------------------------------------------------------------------------

// Reference tables: one cusp per line, "a/c width" or "a/c,width", '#' starts
// a comment.
std::vector<CuspClass> load_reference_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open reference table '" + path + "'");
    std::vector<CuspClass> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        for (char& ch : line)
            if (ch == ',') ch = ' ';
        std::istringstream ls(line);
        std::string cusp_text;
        long long width = 0;
        if (!(ls >> cusp_text >> width)) continue;
        out.push_back({Cusp::parse(cusp_text), width});
    }
    if (out.empty()) throw std::runtime_error("reference table '" + path + "' has no rows");
    return out;
}

int cmd_cusps(const GlobalOptions& g, const std::string& group, const std::string& compare,
              const std::string& format) {
    const GroupSpec spec = GroupSpec::parse(group);
    const std::vector<CuspClass> classes = cusp_representatives(spec);

    if (!compare.empty()) {
        const std::vector<CuspClass> ref = load_reference_table(compare);
        if (ref.size() != classes.size()) {
            std::cerr << "compare: class counts differ (computed " << classes.size()
                      << ", reference " << ref.size() << ")\n";
            return kExitViolated;
        }
        std::vector<bool> used(classes.size(), false);
        for (const CuspClass& r : ref) {
            bool matched = false;
            for (std::size_t i = 0; i < classes.size(); ++i) {
                if (used[i]) continue;
                if (!cusp_equivalent(spec, r.cusp, classes[i].cusp)) continue;
                if (classes[i].width != r.width) {
                    std::cerr << "compare: width mismatch at " << r.cusp.to_string()
                              << " (computed " << classes[i].width << ", reference " << r.width
                              << ")\n";
                    return kExitViolated;
                }
                used[i] = true;
                matched = true;
                break;
            }
            if (!matched) {
                std::cerr << "compare: reference cusp " << r.cusp.to_string()
                          << " matches no computed class\n";
                return kExitViolated;
            }
        }
        // ref.size() == classes.size() and the matching is injective, so it
        // is a width-preserving bijection.
    }

    if (format == "json") {
        nlohmann::ordered_json j;
        j["group"] = spec.to_string();
        j["cusps"] = nlohmann::ordered_json::array();
        for (const CuspClass& c : classes)
            j["cusps"].push_back({{"cusp", c.cusp.to_string()}, {"width", c.width}});
        stamp(j, g);
        emit(j.dump(2), g);
    } else if (format == "csv") {
        std::ostringstream out;
        out << "cusp,width\n";
        for (const CuspClass& c : classes) out << c.cusp.to_string() << "," << c.width << "\n";
        emit(out.str(), g);
    } else {
        std::ostringstream out;
        long long total = 0;
        for (const CuspClass& c : classes) {
            out << c.cusp.to_string() << " " << c.width << "\n";
            total += c.width;
        }
        out << "# " << classes.size() << " classes, widths sum " << total << "\n";
        emit(out.str(), g);
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// series / eval
// ---------------------------------------------------------------------------

int cmd_series(const GlobalOptions& g, const std::string& name, long long terms,
               std::optional<int> conductor, std::optional<int> grid, const std::string& format) {
    const QSeries s = build_named_series(name, Rational(terms), conductor, grid);
    if (format == "json") {
        nlohmann::ordered_json j = s.to_json();
        stamp(j, g);
        emit(j.dump(2), g);
    } else {
        emit(s.to_text(), g);
    }
    return kExitOk;
}

int cmd_eval(const GlobalOptions& g, const std::string& name, long long terms, double re,
             double im, std::optional<int> conductor, std::optional<int> grid,
             const std::string& format) {
    const QSeries s = build_named_series(name, Rational(terms), conductor, grid);
    const EvalResult v = s.eval(std::complex<double>(re, im));
    if (format == "json") {
        nlohmann::ordered_json j;
        j["name"] = name;
        j["tau"] = {re, im};
        j["re"] = v.value.real();
        j["im"] = v.value.imag();
        j["tail"] = v.tail_bound;
        stamp(j, g);
        emit(j.dump(2), g);
    } else {
        std::ostringstream out;
        out.precision(15);
        out << name << " at tau = " << re << " + " << im << "i\n"
            << "value = " << v.value.real() << " + " << v.value.imag() << "i\n"
            << "tail <= " << v.tail_bound << "\n";
        emit(out.str(), g);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact q-series engine for the mod-7 overpartition rank dissection"};
    app.set_version_flag("--version", qdissect::kEngineVersion);
    app.require_subcommand(1);

    GlobalOptions g;
    const auto add_globals = [&g](CLI::App* cmd) {
        cmd->add_option("--jobs", g.jobs, "worker thread budget")->capture_default_str();
        cmd->add_flag("--deterministic", g.deterministic,
                      "suppress the generated_at timestamp");
        cmd->add_option("-o,--output", g.output, "write output to this file instead of stdout");
    };

    // verify
    auto* verify = app.add_subcommand("verify", "run the 62-term vanishing check");
    add_globals(verify);
    long long precision = 130;
    int verify_mutate = 0;
    bool no_cache = false;
    std::string verify_format = "json";
    verify->add_option("--precision", precision, "expansion horizon T")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    verify->add_option("--mutate-term", verify_mutate, "perturb one identity row (test hook)")
        ->check(CLI::Range(1, 62));
    verify->add_flag("--no-cache", no_cache, "ignore QDISSECT_CACHE");
    verify->add_option("--format", verify_format, "json|text")
        ->check(CLI::IsMember({"json", "text"}))
        ->capture_default_str();

    // dissect
    auto* dissect = app.add_subcommand("dissect", "check the residue dissection table");
    add_globals(dissect);
    long long horizon = 150;
    long long depth = 20;
    int dissect_mutate = 0;
    std::string dissect_format = "text";
    dissect->add_option("--horizon", horizon, "compare the assembled sum through q^horizon")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    dissect->add_option("--depth", depth, "closed-form comparison depth")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    dissect->add_option("--mutate-term", dissect_mutate, "perturb one dissection row (test hook)")
        ->check(CLI::Range(1, 58));
    dissect->add_option("--format", dissect_format, "json|text")
        ->check(CLI::IsMember({"json", "text"}))
        ->capture_default_str();

    // ranks
    auto* ranks = app.add_subcommand("ranks", "overpartition rank tables and difference series");
    add_globals(ranks);
    long long ranks_n = -1;
    std::string diff;
    long long terms = 6;
    std::string ranks_format = "csv";
    auto* n_opt = ranks->add_option("--n", ranks_n, "tabulate counts for 0 <= n <= this");
    auto* diff_opt =
        ranks->add_option("--diff", diff, "rank-difference series r,s,d (e.g. 1,0,0)");
    ranks->add_option("--terms", terms, "coefficients to print with --diff")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    ranks->add_option("--format", ranks_format, "csv|json")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    n_opt->excludes(diff_opt);
    diff_opt->excludes(n_opt);

    // cusps
    auto* cusps = app.add_subcommand("cusps", "cusp classes and widths of a congruence group");
    add_globals(cusps);
    std::string group = "G0(98)&G1(14)";
    std::string compare;
    std::string cusps_format = "csv";
    cusps->add_option("--group", group, "group spec, e.g. \"G0(98)&G1(14)\"")
        ->capture_default_str();
    cusps->add_option("--compare", compare,
                      "reference table file; exit 0 iff classes match bijectively with widths");
    cusps->add_option("--format", cusps_format, "csv|json|text")
        ->check(CLI::IsMember({"csv", "json", "text"}))
        ->capture_default_str();

    // series
    auto* series = app.add_subcommand("series", "print a named q-series expansion");
    add_globals(series);
    std::string name;
    long long series_terms = 20;
    int conductor_opt = 0;
    int grid_opt = 0;
    std::string series_format = "text";
    series->add_option("--name", name, "eta(m), f(N,rho), poch(a,b), jacprod(a,b), L(k), "
                                       "N7(k), P(a,c), M17, O7")
        ->required();
    series->add_option("--terms", series_terms, "truncation exponent")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    series->add_option("--conductor", conductor_opt, "cyclotomic conductor override");
    series->add_option("--grid", grid_opt, "exponent grid override");
    series->add_option("--format", series_format, "json|text")
        ->check(CLI::IsMember({"json", "text"}))
        ->capture_default_str();

    // eval
    auto* eval = app.add_subcommand("eval", "numerically evaluate a named q-series");
    add_globals(eval);
    std::string eval_name;
    long long eval_terms = 60;
    double tau_re = 0.0;
    double tau_im = 1.0;
    int eval_conductor = 0;
    int eval_grid = 0;
    std::string eval_format = "text";
    eval->add_option("--name", eval_name, "same names as `series`")->required();
    eval->add_option("--terms", eval_terms, "truncation exponent for the partial sum")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    eval->add_option("--re", tau_re, "Re(tau)")->capture_default_str();
    eval->add_option("--im", tau_im, "Im(tau), must be positive")->capture_default_str();
    eval->add_option("--conductor", eval_conductor, "cyclotomic conductor override");
    eval->add_option("--grid", eval_grid, "exponent grid override");
    eval->add_option("--format", eval_format, "json|text")
        ->check(CLI::IsMember({"json", "text"}))
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);   // prints help or the error message
        return code == 0 ? 0 : kExitError;
    }

    try {
        if (app.got_subcommand(verify))
            return cmd_verify(g, precision, verify_mutate, no_cache, verify_format);
        if (app.got_subcommand(dissect))
            return cmd_dissect(g, horizon, depth, dissect_mutate, dissect_format);
        if (app.got_subcommand(ranks)) {
            if (diff.empty() && ranks_n < 0)
                throw std::invalid_argument("ranks: pass --n or --diff");
            return cmd_ranks(g, ranks_n, diff, terms, ranks_format);
        }
        if (app.got_subcommand(cusps)) return cmd_cusps(g, group, compare, cusps_format);
        if (app.got_subcommand(series))
            return cmd_series(g, name, series_terms,
                              conductor_opt > 0 ? std::optional<int>(conductor_opt) : std::nullopt,
                              grid_opt > 0 ? std::optional<int>(grid_opt) : std::nullopt,
                              series_format);
        if (app.got_subcommand(eval))
            return cmd_eval(g, eval_name, eval_terms, tau_re, tau_im,
                            eval_conductor > 0 ? std::optional<int>(eval_conductor) : std::nullopt,
                            eval_grid > 0 ? std::optional<int>(eval_grid) : std::nullopt,
                            eval_format);
        throw std::logic_error("no subcommand dispatched");
    } catch (const std::exception& e) {
        std::cerr << "qdissect: " << e.what() << "\n";
        return kExitError;
    }
}
