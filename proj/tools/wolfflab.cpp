#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wolfflab/io.hpp"
#include "wolfflab/wolfflab.hpp"

using namespace wolfflab;
namespace fs = std::filesystem;
using io::json;

namespace {

struct Options {
    std::string scenario;
    int mesh = 0;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    std::string measure_file;
    std::vector<double> x0{0.0, 0.0};
    double radius = 0.0;
    double gamma = 1.0;
};

enum Exit { ok = 0, failed = 1, inconclusive = 2 };

struct Loaded {
    Scenario sc;
    YAML::Node root;
};

Loaded load(const Options& o)
{
    Loaded l;
    if (!o.scenario.empty()) {
        try {
            l.root = YAML::LoadFile(o.scenario);
        } catch (const YAML::Exception& e) {
            throw Error(ErrorCode::parse, "cannot read scenario file " + o.scenario + ": " + e.what());
        }
        l.sc = io::scenario_from_yaml(l.root);
    }
    if (o.mesh > 0) {
        l.sc.coarse = o.mesh;
        l.sc.fine = 2 * o.mesh - 1;
    }
    if (o.seed) {
        l.sc.seed = *o.seed;
        l.sc.coefficient.seed = *o.seed;
    }
    l.sc.validate();
    return l;
}

fs::path out_dir(const Options& o)
{
    fs::create_directories(o.out);
    return o.out;
}

template <class F>
void write_file(const fs::path& p, F&& body)
{
    std::ofstream f(p);
    if (!f)
        throw Error(ErrorCode::parse, "cannot write " + p.string());
    body(f);
}

// atoms as "x,y,weight" lines; '#' starts a comment
RadonMeasure read_measure_file(const std::string& path)
{
    std::ifstream f(path);
    if (!f)
        throw Error(ErrorCode::parse, "cannot read measure file " + path);
    std::vector<Atom> atoms;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 'x')
            continue;
        const auto cells = wolfflab::detail::split_csv(line);
        if (cells.size() != 3)
            throw Error(ErrorCode::parse, "measure rows are x,y,weight");
        atoms.push_back({{wolfflab::detail::parse_double(cells[0]), wolfflab::detail::parse_double(cells[1])},
                         wolfflab::detail::parse_double(cells[2])});
    }
    return RadonMeasure(atoms);
}

Instance instance_at(const Loaded& l, const Options& o, int mesh)
{
    Instance in = instantiate(l.sc, mesh);
    if (l.root && l.root["coeff_file"]) {
        std::ifstream f(l.root["coeff_file"].as<std::string>());
        if (!f)
            throw Error(ErrorCode::parse, "cannot read coefficient file");
        in.problem.coeff = read_coefficient_csv(f, in.domain, l.sc.lambda);
    }
    std::string mf = o.measure_file;
    if (mf.empty() && l.root && l.root["measure_file"])
        mf = l.root["measure_file"].as<std::string>();
    if (!mf.empty())
        in.problem.rhs = read_measure_file(mf);
    return in;
}

int gen_coeff(const Options& o)
{
    const Loaded l = load(o);
    const DomainPtr d = make_domain(l.sc.domain, l.sc.fine);
    const CoefficientField c = make_coefficient(l.sc.coefficient, d, l.sc.lambda);
    const fs::path dir = out_dir(o);
    write_file(dir / "coefficient.csv", [&](std::ostream& os) { write_coefficient_csv(os, c); });
    const auto m = oscillation_modulus(c, geometric_radii(2.0 * d->h(), 0.5 * l.sc.domain.half_width, 12));
    write_file(dir / "modulus.csv", [&](std::ostream& os) { write_modulus_csv(os, m); });
    const auto e = ellipticity_check(c);
    std::cout << "wrote " << (dir / "coefficient.csv").string() << " and modulus.csv; spectrum in [" << e.lambda_min
              << ", " << e.lambda_max << "]\n";
    return ok;
}

int solve_cmd(const Options& o)
{
    const Loaded l = load(o);
    const Instance in = instance_at(l, o, l.sc.fine);
    const Solution sol = solve(in.problem, l.sc.solver);
    const fs::path dir = out_dir(o);
    write_file(dir / "solution.csv", [&](std::ostream& os) { write_csv(os, sol.u); });
    write_file(dir / "gradient.csv", [&](std::ostream& os) { write_csv(os, sol.grad); });
    json j{{"iterations", sol.iterations}, {"residual", sol.residual_norm}, {"converged", sol.converged}};
    io::write_text((dir / "solve_summary.json").string(), j.dump(2) + "\n");
    std::cout << j.dump() << '\n';
    return sol.converged ? ok : inconclusive;
}

int potential_cmd(const Options& o)
{
    const Loaded l = load(o);
    const Instance in = instance_at(l, o, l.sc.coarse);
    const RadonMeasure& mu = in.problem.rhs;
    const Domain& d = *in.domain;
    const double p = l.sc.p, R = l.sc.R;
    const fs::path dir = out_dir(o);
    write_file(dir / "potential.csv", [&](std::ostream& os) {
        os << "x,y,wolff,riesz,p_gamma,flags\n";
        for (std::size_t k = 0; k < d.size(); ++k) {
            if (!d.active(k))
                continue;
            const Point x = d.node(k);
            const double w = wolff(mu, x, PotentialQuery::wolff_1p(p, R));
            const double i1 = riesz(mu, x, R);
            const double pg = p_gamma(mu, x, o.gamma, R);
            const bool pole = std::isinf(w) || std::isinf(i1) || std::isinf(pg);
            os << wolfflab::detail::format_double(x.x) << ',' << wolfflab::detail::format_double(x.y) << ','
               << wolfflab::detail::format_double(w) << ',' << wolfflab::detail::format_double(i1) << ','
               << wolfflab::detail::format_double(pg) << ',' << (pole ? "pole" : "") << '\n';
        }
    });
    std::cout << "wrote " << (dir / "potential.csv").string() << '\n';
    return ok;
}

const std::vector<std::string> theorems{"interior",      "boundary",    "global",  "comparison_vw",
                                        "comparison_uw", "lipschitz_w", "modulus", "reverse_holder"};

VerificationReport run_theorem(const std::string& t, const Scenario& sc, const Options& o)
{
    const Point x0{o.x0.at(0), o.x0.at(1)};
    const double r = o.radius > 0.0 ? o.radius : 0.5 * sc.R;
    if (t == "interior")
        return verify_interior_pointwise(sc);
    if (t == "boundary")
        return verify_boundary_pointwise(sc);
    if (t == "global")
        return verify_global_lipschitz(sc);
    if (t == "comparison_vw")
        return verify_comparison_vw(sc, x0, r, case_gamma0(sc.p) < 1.0 ? 0.5 : 1.0);
    if (t == "comparison_uw")
        return verify_comparison_uw(sc, x0, r);
    if (t == "lipschitz_w")
        return verify_lipschitz_w(sc, x0, o.radius > 0.0 ? o.radius : sc.R);
    if (t == "modulus")
        return verify_gradient_modulus(sc, x0);
    if (t == "reverse_holder")
        return verify_reverse_holder(sc, x0, {2.0 * sc.R, sc.R, 0.5 * sc.R});
    throw Error(ErrorCode::invalid_parameter, "unknown theorem " + t);
}

struct Tally {
    bool hard = false, unsure = false, fail = false;
    json summary = json::array();

    void add(const VerificationReport& rep)
    {
        summary.push_back(io::summary(rep));
        hard = hard || rep.hard_failure;
        unsure = unsure || rep.inconclusive();
        fail = fail || !rep.pass;
        std::printf("%-16s %-14s C_fit=%-12.5g stability=%-8.4f %s\n", rep.scenario.c_str(), rep.theorem.c_str(), rep.C_fit,
                    rep.mesh_stability_ratio, rep.pass ? "pass" : rep.inconclusive() ? "inconclusive" : "FAIL");
    }

    void error(const std::string& scenario, const std::string& theorem, const Error& e)
    {
        summary.push_back({{"scenario", scenario}, {"theorem", theorem}, {"pass", false}, {"error", e.what()}});
        hard = true;
        std::printf("%-16s %-14s error: %s\n", scenario.c_str(), theorem.c_str(), e.what());
    }

    int code() const
    {
        if (hard)
            return failed;
        if (unsure)
            return inconclusive;
        return fail ? failed : ok;
    }
};

void check(Tally& tally, const Scenario& sc, const std::string& theorem, const Options& o, const fs::path& dir)
{
    try {
        const VerificationReport rep = run_theorem(theorem, sc, o);
        write_file(dir / (sc.id + "_" + theorem + ".csv"), [&](std::ostream& os) { io::write_records_csv(os, rep); });
        tally.add(rep);
    } catch (const Error& e) {
        tally.error(sc.id, theorem, e);
    }
}

int verify_cmd(const Options& o, const std::string& theorem)
{
    const Loaded l = load(o);
    const fs::path dir = out_dir(o);
    Tally tally;
    check(tally, l.sc, theorem, o, dir);
    io::write_text((dir / "summary.json").string(), tally.summary.dump(2) + "\n");
    return tally.code();
}

// Scenario targets, or the default interior battery when no scenario is given.
// Also writes the excess-decay profile of the first scenario.
int report_cmd(const Options& o)
{
    const fs::path dir = out_dir(o);
    Tally tally;
    std::vector<std::pair<Scenario, std::vector<std::string>>> plan;
    if (o.scenario.empty()) {
        for (Scenario sc : default_battery(o.seed.value_or(1))) {
            if (o.mesh > 0) {
                sc.coarse = o.mesh;
                sc.fine = 2 * o.mesh - 1;
            }
            plan.push_back({sc, {"interior"}});
        }
    } else {
        const Loaded l = load(o);
        plan.push_back({l.sc, l.sc.targets});
    }
    for (const auto& [sc, targets] : plan)
        for (const auto& t : targets)
            check(tally, sc, t, o, dir);
    try {
        const Scenario& sc = plan.front().first;
        const Instance in = instantiate(sc, sc.fine);
        const Solution sol = solve(in.problem, sc.solver);
        const ExcessProfile prof = profile(sol.grad, {o.x0.at(0), o.x0.at(1)}, sc.R, 0.5, 8);
        write_file(dir / "excess_profile.csv", [&](std::ostream& os) { write_profile_csv(os, prof); });
    } catch (const Error& e) {
        std::printf("excess profile skipped: %s\n", e.what());
    }
    io::write_text((dir / "summary.json").string(), tally.summary.dump(2) + "\n");
    return tally.code();
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Gradient potential estimates for p-Laplace type equations with measure data"};
    app.require_subcommand(1);
    Options o;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--scenario", o.scenario, "scenario YAML file");
        sub->add_option("--mesh", o.mesh, "coarse lattice size n (fine is 2n-1)")->check(CLI::Range(9, 4097));
        sub->add_option("--seed", o.seed, "seed for randomized coefficients and the battery");
        sub->add_option("--out", o.out, "output directory");
    };
    auto* gen = app.add_subcommand("gen-coeff", "sample a coefficient field and its oscillation modulus");
    auto* sol = app.add_subcommand("solve", "solve the scenario problem on the fine lattice");
    auto* pot = app.add_subcommand("potential", "Wolff, Riesz and P_gamma potentials on the coarse lattice");
    auto* ver = app.add_subcommand("verify", "run one estimate check on two meshes");
    auto* rep = app.add_subcommand("report", "run all scenario targets (default: the interior battery)");
    std::string theorem;
    for (auto* s : {gen, sol, pot, ver, rep})
        common(s);
    for (auto* s : {sol, pot})
        s->add_option("--measure", o.measure_file, "atoms file with rows x,y,weight");
    pot->add_option("--gamma", o.gamma, "P_gamma exponent")->check(CLI::PositiveNumber);
    for (auto* s : {ver, rep}) {
        s->add_option("--x0", o.x0, "centre for local checks")->expected(2);
        s->add_option("--radius", o.radius, "radius for local checks");
    }
    ver->add_option("theorem", theorem, "check to run")->required()->check(CLI::IsMember(theorems));
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? ok : failed;
    }

    try {
        if (*gen)
            return gen_coeff(o);
        if (*sol)
            return solve_cmd(o);
        if (*pot)
            return potential_cmd(o);
        if (*ver)
            return verify_cmd(o, theorem);
        return report_cmd(o);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return failed;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return failed;
    }
}
