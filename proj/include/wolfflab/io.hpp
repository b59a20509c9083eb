#pragma once

#include <cmath>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "harness.hpp"

namespace wolfflab::io {

using json = nlohmann::json;

namespace detail {

inline Point point_of(const YAML::Node& n)
{
    if (!n.IsSequence() || n.size() != 2)
        throw Error(ErrorCode::parse, "a point is a two-element sequence");
    return {n[0].as<double>(), n[1].as<double>()};
}

inline YAML::Node node_of(const Point& p)
{
    YAML::Node n;
    n.SetStyle(YAML::EmitterStyle::Flow);
    n.push_back(p.x);
    n.push_back(p.y);
    return n;
}

template <class T>
void read(const YAML::Node& n, const char* key, T& out)
{
    if (n[key])
        out = n[key].as<T>();
}

// JSON has no infinity; non-finite numbers are written as strings.
inline json number(double v)
{
    if (std::isfinite(v))
        return v;
    if (std::isnan(v))
        return "nan";
    return v > 0 ? "inf" : "-inf";
}

} // namespace detail

inline CoefficientSpec coefficient_from_yaml(const YAML::Node& n, CoefficientSpec c = {})
{
    if (n["kind"])
        c.kind = coefficient_kind_from_string(n["kind"].as<std::string>());
    detail::read(n, "amplitude", c.amplitude);
    detail::read(n, "beta", c.beta);
    detail::read(n, "gamma", c.gamma);
    detail::read(n, "scale", c.scale);
    detail::read(n, "generations", c.generations);
    detail::read(n, "spike_radius", c.spike_radius);
    detail::read(n, "seed", c.seed);
    if (n["base"]) {
        const YAML::Node b = n["base"];
        if (!b.IsSequence() || b.size() != 4)
            throw Error(ErrorCode::parse, "coefficient base is [a11, a12, a21, a22]");
        c.base = {b[0].as<double>(), b[1].as<double>(), b[2].as<double>(), b[3].as<double>()};
    }
    return c;
}

inline MeasureSpec measure_from_yaml(const YAML::Node& n, MeasureSpec m = {})
{
    if (n["kind"])
        m.kind = measure_kind_from_string(n["kind"].as<std::string>());
    detail::read(n, "mass", m.mass);
    detail::read(n, "radius", m.radius);
    if (n["center"])
        m.center = detail::point_of(n["center"]);
    if (n["atoms"]) {
        m.atoms.clear();
        for (const auto& a : n["atoms"])
            m.atoms.push_back(detail::point_of(a));
    }
    if ((m.kind == MeasureKind::delta && m.atoms.size() != 1) || (m.kind == MeasureKind::two_atom && m.atoms.size() != 2))
        throw Error(ErrorCode::parse, std::string("measure kind ") + to_string(m.kind) + " has the wrong number of atoms");
    return m;
}

inline DomainSpec domain_from_yaml(const YAML::Node& n, DomainSpec d = {})
{
    if (n["kind"])
        d.kind = domain_kind_from_string(n["kind"].as<std::string>());
    detail::read(n, "half_width", d.half_width);
    detail::read(n, "chi_amplitude", d.chi_amplitude);
    detail::read(n, "chi_frequency", d.chi_frequency);
    return d;
}

inline BoundarySpec boundary_from_yaml(const YAML::Node& n, BoundarySpec b = {})
{
    if (n["kind"])
        b.kind = boundary_kind_from_string(n["kind"].as<std::string>());
    if (n["slope"])
        b.slope = detail::point_of(n["slope"]);
    detail::read(n, "offset", b.offset);
    detail::read(n, "curvature", b.curvature);
    return b;
}

inline SolverConfig solver_from_yaml(const YAML::Node& n, SolverConfig c = {})
{
    if (n["scheme"])
        c.scheme = scheme_from_string(n["scheme"].as<std::string>());
    detail::read(n, "delta_reg", c.delta_reg);
    detail::read(n, "continuation_ratio", c.continuation_ratio);
    detail::read(n, "continuation_steps", c.continuation_steps);
    detail::read(n, "tol", c.tol);
    detail::read(n, "stage_tol", c.stage_tol);
    detail::read(n, "max_iter", c.max_iter);
    detail::read(n, "damping", c.damping);
    c.validate();
    return c;
}

// A scenario document. `battery: {index, seed}` starts from the battery
// entry; every other key overrides it.
inline Scenario scenario_from_yaml(const YAML::Node& root)
{
    try {
        Scenario sc;
        if (root["battery"]) {
            const YAML::Node b = root["battery"];
            sc = battery_scenario(b["index"].as<int>(), b["seed"] ? b["seed"].as<std::uint64_t>() : 1);
        }
        detail::read(root, "id", sc.id);
        detail::read(root, "seed", sc.seed);
        detail::read(root, "p", sc.p);
        detail::read(root, "s", sc.s);
        detail::read(root, "lambda", sc.lambda);
        detail::read(root, "R", sc.R);
        if (root["mesh"]) {
            const YAML::Node m = root["mesh"];
            if (m.IsSequence()) {
                sc.coarse = m[0].as<int>();
                sc.fine = m[1].as<int>();
            } else {
                sc.coarse = m.as<int>();
                sc.fine = 2 * sc.coarse - 1;
            }
        }
        if (root["coefficient"])
            sc.coefficient = coefficient_from_yaml(root["coefficient"], sc.coefficient);
        if (root["measure"])
            sc.measure = measure_from_yaml(root["measure"], sc.measure);
        if (root["domain"])
            sc.domain = domain_from_yaml(root["domain"], sc.domain);
        if (root["boundary"])
            sc.boundary = boundary_from_yaml(root["boundary"], sc.boundary);
        if (root["solver"])
            sc.solver = solver_from_yaml(root["solver"], sc.solver);
        if (root["targets"]) {
            sc.targets.clear();
            for (const auto& t : root["targets"])
                sc.targets.push_back(t.as<std::string>());
        }
        sc.validate();
        return sc;
    } catch (const YAML::Exception& e) {
        throw Error(ErrorCode::parse, e.what());
    }
}

inline Scenario load_scenario(const std::string& path)
{
    try {
        return scenario_from_yaml(YAML::LoadFile(path));
    } catch (const YAML::BadFile&) {
        throw Error(ErrorCode::parse, "cannot read scenario file " + path);
    }
}

inline YAML::Node scenario_to_yaml(const Scenario& sc)
{
    YAML::Node n;
    n["id"] = sc.id;
    n["seed"] = sc.seed;
    n["p"] = sc.p;
    n["s"] = sc.s;
    n["lambda"] = sc.lambda;
    n["R"] = sc.R;
    YAML::Node mesh;
    mesh.SetStyle(YAML::EmitterStyle::Flow);
    mesh.push_back(sc.coarse);
    mesh.push_back(sc.fine);
    n["mesh"] = mesh;
    YAML::Node c;
    c["kind"] = to_string(sc.coefficient.kind);
    c["amplitude"] = sc.coefficient.amplitude;
    c["beta"] = sc.coefficient.beta;
    c["gamma"] = sc.coefficient.gamma;
    c["scale"] = sc.coefficient.scale;
    c["generations"] = sc.coefficient.generations;
    c["spike_radius"] = sc.coefficient.spike_radius;
    c["seed"] = sc.coefficient.seed;
    YAML::Node base;
    base.SetStyle(YAML::EmitterStyle::Flow);
    for (double v : {sc.coefficient.base.xx, sc.coefficient.base.xy, sc.coefficient.base.yx, sc.coefficient.base.yy})
        base.push_back(v);
    c["base"] = base;
    n["coefficient"] = c;
    YAML::Node m;
    m["kind"] = to_string(sc.measure.kind);
    m["mass"] = sc.measure.mass;
    m["center"] = detail::node_of(sc.measure.center);
    m["radius"] = sc.measure.radius;
    YAML::Node atoms(YAML::NodeType::Sequence);
    for (const Point& a : sc.measure.atoms)
        atoms.push_back(detail::node_of(a));
    m["atoms"] = atoms;
    n["measure"] = m;
    YAML::Node d;
    d["kind"] = to_string(sc.domain.kind);
    d["half_width"] = sc.domain.half_width;
    d["chi_amplitude"] = sc.domain.chi_amplitude;
    d["chi_frequency"] = sc.domain.chi_frequency;
    n["domain"] = d;
    YAML::Node b;
    b["kind"] = to_string(sc.boundary.kind);
    b["slope"] = detail::node_of(sc.boundary.slope);
    b["offset"] = sc.boundary.offset;
    b["curvature"] = sc.boundary.curvature;
    n["boundary"] = b;
    YAML::Node s;
    s["scheme"] = to_string(sc.solver.scheme);
    s["tol"] = sc.solver.tol;
    s["max_iter"] = sc.solver.max_iter;
    n["solver"] = s;
    YAML::Node t(YAML::NodeType::Sequence);
    for (const auto& x : sc.targets)
        t.push_back(x);
    n["targets"] = t;
    return n;
}

inline std::string dump(const YAML::Node& n)
{
    YAML::Emitter em;
    em.SetDoublePrecision(17);
    em << n;
    return em.c_str();
}

// Summary entry: {scenario, theorem, C_fit, stability, pass} plus diagnostics.
inline json summary(const VerificationReport& rep)
{
    json j;
    j["scenario"] = rep.scenario;
    j["theorem"] = rep.theorem;
    j["C_fit"] = detail::number(rep.C_fit);
    j["stability"] = detail::number(rep.mesh_stability_ratio);
    j["pass"] = rep.pass;
    j["C_fit_coarse"] = detail::number(rep.C_fit_coarse);
    j["nonvacuous"] = rep.nonvacuous;
    j["converged"] = rep.converged;
    j["inconclusive"] = rep.inconclusive();
    j["hard_failure"] = rep.hard_failure;
    j["runtime"] = rep.runtime;
    j["points"] = rep.records.size();
    if (!rep.note.empty())
        j["note"] = rep.note;
    for (const auto& [k, v] : rep.extras)
        j["extras"][k] = detail::number(v);
    return j;
}

inline void write_records_csv(std::ostream& os, const VerificationReport& rep)
{
    os << "x,y,lhs,rhs,ratio";
    for (const auto& t : rep.term_names)
        os << ',' << t;
    os << '\n';
    for (const PointRecord& r : rep.records) {
        os << wolfflab::detail::format_double(r.x.x) << ',' << wolfflab::detail::format_double(r.x.y) << ','
           << wolfflab::detail::format_double(r.lhs) << ',' << wolfflab::detail::format_double(r.rhs) << ','
           << wolfflab::detail::format_double(r.ratio());
        for (double t : r.terms)
            os << ',' << wolfflab::detail::format_double(t);
        os << '\n';
    }
}

inline void write_text(const std::string& path, const std::string& text)
{
    std::ofstream f(path);
    if (!f)
        throw Error(ErrorCode::parse, "cannot write " + path);
    f << text;
}

} // namespace wolfflab::io
