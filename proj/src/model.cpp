#include "nonlocal_dp/model.hpp"

#include "nonlocal_dp/format.hpp"
#include "toml_lite.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace nldp {

using detail::TomlDoc;
using detail::TomlTable;

namespace {

Vec to_vec(const std::vector<double>& v) {
    Vec out(static_cast<long>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<long>(i)] = v[i];
    return out;
}

const TomlTable& require_section(const TomlDoc& doc, const std::string& name) {
    const auto it = doc.tables.find(name);
    if (it == doc.tables.end()) throw ParseError(1, "missing section [" + name + "]");
    return it->second;
}

TimeGrid read_time(const TomlDoc& doc) {
    const auto& t = require_section(doc, "time");
    TimeGrid time;
    time.r = detail::get_number(t, "time", "r");
    time.T = detail::get_number(t, "time", "T");
    time.N = detail::get_int(t, "time", "N");
    if (time.N < 1) throw ParseError(t.line, "N must be >= 1");
    return time;
}

SpaceGrid read_space(const TomlDoc& doc) {
    const auto& s = require_section(doc, "space");
    SpaceGrid space;
    space.n = detail::get_int(s, "space", "n");
    if (space.n < 1) throw ParseError(s.line, "n must be >= 1");
    space.lower = to_vec(detail::get_number_array(s, "space", "lower"));
    space.upper = to_vec(detail::get_number_array(s, "space", "upper"));
    space.M = detail::get_int_array(s, "space", "M");
    return space;
}

Bounds read_bounds(const TomlDoc& doc) {
    Bounds bounds;
    const auto it = doc.tables.find("bounds");
    if (it == doc.tables.end()) return bounds;
    const auto& b = it->second;
    bounds.a_bound = detail::get_number_or(b, "bounds", "a_bound", bounds.a_bound);
    bounds.b_bound = detail::get_number_or(b, "bounds", "b_bound", bounds.b_bound);
    bounds.c_bound = detail::get_number_or(b, "bounds", "c_bound", bounds.c_bound);
    bounds.eps_spd = detail::get_number_or(b, "bounds", "eps_spd", bounds.eps_spd);
    return bounds;
}

ParamPoint read_candidate(const TomlTable& t, int n) {
    ParamPoint theta;
    const auto a_flat = detail::get_number_array(t, "gamma.candidates", "a");
    if (static_cast<int>(a_flat.size()) != n * n)
        throw ParseError(t.line, "candidate 'a' must have n*n entries (row-major)");
    theta.a = Mat(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) theta.a(i, j) = a_flat[i * n + j];
    const auto b = detail::get_number_array(t, "gamma.candidates", "b");
    if (static_cast<int>(b.size()) != n)
        throw ParseError(t.line, "candidate 'b' must have n entries");
    theta.b = to_vec(b);
    if (t.has("jumps")) {
        for (const auto& row : detail::get_nested_array(t, "gamma.candidates", "jumps")) {
            if (static_cast<int>(row.size()) != n + 1)
                throw ParseError(t.line, "each jump row must be [y_1..y_n, lambda]");
            JumpAtom atom;
            atom.y = Vec(n);
            for (int i = 0; i < n; ++i) atom.y[i] = row[i];
            atom.lambda = row[n];
            theta.jumps.push_back(std::move(atom));
        }
    }
    return theta;
}

GammaMap read_gamma(const TomlDoc& doc, int n) {
    const auto& g = require_section(doc, "gamma");
    GammaMap gamma;
    const std::string mode = detail::get_string(g, "gamma", "mode");
    if (mode == "constant") gamma.mode = GammaMode::Constant;
    else if (mode == "time-dependent") gamma.mode = GammaMode::TimeDependent;
    else if (mode == "state-dependent") gamma.mode = GammaMode::StateDependent;
    else throw ParseError(g.line, "gamma mode must be constant, time-dependent or state-dependent");

    if (gamma.mode == GammaMode::TimeDependent)
        gamma.set_for_step = detail::get_int_array(g, "gamma", "set_for_step");
    if (gamma.mode == GammaMode::StateDependent)
        gamma.set_for_cell = detail::get_int_array(g, "gamma", "set_for_cell");

    const auto it = doc.table_arrays.find("gamma.candidates");
    if (it == doc.table_arrays.end() || it->second.empty())
        throw ParseError(g.line, "no [[gamma.candidates]] blocks");
    int max_set = 0;
    for (const auto& t : it->second)
        if (t.has("set")) max_set = std::max(max_set, detail::get_int(t, "gamma.candidates", "set"));
    gamma.sets.resize(static_cast<std::size_t>(max_set) + 1);
    for (const auto& t : it->second) {
        const int set = t.has("set") ? detail::get_int(t, "gamma.candidates", "set") : 0;
        if (set < 0) throw ParseError(t.line, "candidate 'set' must be >= 0");
        gamma.sets[set].push_back(read_candidate(t, n));
    }
    return gamma;
}

Penalty read_penalty(const TomlDoc& doc) {
    Penalty penalty;
    const auto it = doc.tables.find("penalty");
    if (it == doc.tables.end()) return penalty;  // default: zero
    const auto& p = it->second;
    const std::string family = detail::get_string(p, "penalty", "family");
    if (family == "zero") {
        penalty.family = PenaltyFamily::Zero;
    } else if (family == "constant") {
        penalty.family = PenaltyFamily::Constant;
        penalty.c = detail::get_number(p, "penalty", "c");
    } else if (family == "quadratic_drift") {
        penalty.family = PenaltyFamily::QuadraticDrift;
        penalty.eta = detail::get_number_or(p, "penalty", "eta", 1.0);
    } else if (family == "table") {
        penalty.family = PenaltyFamily::Table;
        const auto rows = detail::get_nested_array(p, "penalty", "values");
        if (rows.empty()) throw ParseError(p.line, "penalty table 'values' is empty");
        const std::size_t cols = rows[0].size();
        penalty.table = Mat(static_cast<long>(rows.size()), static_cast<long>(cols));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != cols)
                throw ParseError(p.line, "penalty table rows must have equal length");
            for (std::size_t j = 0; j < cols; ++j)
                penalty.table(static_cast<long>(i), static_cast<long>(j)) = rows[i][j];
        }
    } else {
        throw ParseError(p.line, "penalty family must be zero, constant, quadratic_drift or table");
    }
    return penalty;
}

Payoff read_payoff(const TomlDoc& doc, const SpaceGrid& space) {
    const auto& p = require_section(doc, "payoff");
    Payoff payoff;
    const std::string family = detail::get_string(p, "payoff", "family");
    payoff.scale = detail::get_number_or(p, "payoff", "scale", 1.0);
    if (family == "quadratic") payoff.family = PayoffFamily::Quadratic;
    else if (family == "absolute") payoff.family = PayoffFamily::Absolute;
    else if (family == "call") payoff.family = PayoffFamily::Call;
    else if (family == "indicator_smoothed") payoff.family = PayoffFamily::IndicatorSmoothed;
    else if (family == "table") payoff.family = PayoffFamily::Table;
    else
        throw ParseError(p.line,
                         "payoff family must be quadratic, absolute, call, indicator_smoothed or table");

    if (payoff.family == PayoffFamily::Quadratic || payoff.family == PayoffFamily::Absolute) {
        payoff.center = p.has("center") ? to_vec(detail::get_number_array(p, "payoff", "center"))
                                        : Vec::Zero(space.n);
    }
    if (payoff.family == PayoffFamily::Call || payoff.family == PayoffFamily::IndicatorSmoothed) {
        payoff.strike = detail::get_number_or(p, "payoff", "strike", 0.0);
        payoff.width = detail::get_number_or(p, "payoff", "width", 0.0);
    }
    if (payoff.family == PayoffFamily::Table)
        payoff.table = to_vec(detail::get_number_array(p, "payoff", "values"));
    return payoff;
}

}  // namespace

void Model::validate() const {
    time.validate();
    space.validate();
    gamma.validate(time, space, bounds);
    penalty.validate(space, gamma.max_candidates());
    payoff.validate(space);

    // The running cost must be finite with a finite sup over every
    // (step, cell, candidate) combination reachable in this model.
    double sup = -std::numeric_limits<double>::infinity();
    for (const auto& set : gamma.sets) {
        for (std::size_t k = 0; k < set.size(); ++k) {
            const double g0 =
                penalty.eval(time.r, space.point(0), set[k], static_cast<int>(k), space);
            if (!std::isfinite(g0)) throw Error("penalty: non-finite value on a candidate");
            sup = std::max(sup, g0);
        }
    }
    if (penalty.family == PenaltyFamily::Table) {
        if (!penalty.table.allFinite()) throw Error("penalty: table has a non-finite value");
        sup = std::max(sup, penalty.table.maxCoeff());
    }
    if (!std::isfinite(sup)) throw Error("penalty: sup over candidates is not finite");
}

bool Model::operator==(const Model& o) const {
    return time == o.time && space == o.space && gamma == o.gamma && penalty == o.penalty &&
           payoff == o.payoff && bounds == o.bounds;
}

Model load_model(const std::string& text) {
    const TomlDoc doc = detail::parse_toml(text);
    Model model;
    model.time = read_time(doc);
    model.space = read_space(doc);
    model.space.validate();
    model.bounds = read_bounds(doc);
    model.gamma = read_gamma(doc, model.space.n);
    model.penalty = read_penalty(doc);
    model.payoff = read_payoff(doc, model.space);
    model.validate();

    double min_width = std::numeric_limits<double>::infinity();
    for (int a = 0; a < model.space.n; ++a)
        min_width = std::min(min_width, model.space.upper[a] - model.space.lower[a]);
    for (std::size_t s = 0; s < model.gamma.sets.size(); ++s)
        for (std::size_t k = 0; k < model.gamma.sets[s].size(); ++k)
            for (const auto& atom : model.gamma.sets[s][k].jumps)
                if (atom.y.norm() > 0.1 * min_width) {
                    std::ostringstream w;
                    w << "jump displacement |y| = " << atom.y.norm() << " in set " << s
                      << " candidate " << k << " exceeds 10% of the box width";
                    model.warnings.push_back(w.str());
                }
    return model;
}

Model load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open model file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_model(buf.str());
}

namespace {

void write_vec(std::ostream& out, const char* key, const Vec& v) {
    out << key << " = [";
    for (long i = 0; i < v.size(); ++i) {
        if (i) out << ", ";
        out << format_double(v[i]);
    }
    out << "]\n";
}

}  // namespace

std::string serialize_model(const Model& model) {
    std::ostringstream out;
    out << "[time]\n";
    out << "r = " << format_double(model.time.r) << "\n";
    out << "T = " << format_double(model.time.T) << "\n";
    out << "N = " << model.time.N << "\n\n";

    out << "[space]\n";
    out << "n = " << model.space.n << "\n";
    write_vec(out, "lower", model.space.lower);
    write_vec(out, "upper", model.space.upper);
    out << "M = [";
    for (std::size_t i = 0; i < model.space.M.size(); ++i) {
        if (i) out << ", ";
        out << model.space.M[i];
    }
    out << "]\n\n";

    out << "[bounds]\n";
    out << "a_bound = " << format_double(model.bounds.a_bound) << "\n";
    out << "b_bound = " << format_double(model.bounds.b_bound) << "\n";
    out << "c_bound = " << format_double(model.bounds.c_bound) << "\n";
    out << "eps_spd = " << format_double(model.bounds.eps_spd) << "\n\n";

    out << "[gamma]\n";
    switch (model.gamma.mode) {
        case GammaMode::Constant: out << "mode = \"constant\"\n"; break;
        case GammaMode::TimeDependent: out << "mode = \"time-dependent\"\n"; break;
        case GammaMode::StateDependent: out << "mode = \"state-dependent\"\n"; break;
    }
    auto write_int_array = [&](const char* key, const std::vector<int>& v) {
        out << key << " = [";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out << ", ";
            out << v[i];
        }
        out << "]\n";
    };
    if (model.gamma.mode == GammaMode::TimeDependent)
        write_int_array("set_for_step", model.gamma.set_for_step);
    if (model.gamma.mode == GammaMode::StateDependent)
        write_int_array("set_for_cell", model.gamma.set_for_cell);
    out << "\n";

    for (std::size_t s = 0; s < model.gamma.sets.size(); ++s) {
        for (const auto& theta : model.gamma.sets[s]) {
            out << "[[gamma.candidates]]\n";
            if (model.gamma.sets.size() > 1) out << "set = " << s << "\n";
            out << "a = [";
            const int n = theta.dim();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    if (i || j) out << ", ";
                    out << format_double(theta.a(i, j));
                }
            out << "]\n";
            write_vec(out, "b", theta.b);
            if (!theta.jumps.empty()) {
                out << "jumps = [";
                for (std::size_t k = 0; k < theta.jumps.size(); ++k) {
                    if (k) out << ", ";
                    out << "[";
                    for (long i = 0; i < theta.jumps[k].y.size(); ++i)
                        out << format_double(theta.jumps[k].y[i]) << ", ";
                    out << format_double(theta.jumps[k].lambda) << "]";
                }
                out << "]\n";
            }
            out << "\n";
        }
    }

    out << "[penalty]\n";
    switch (model.penalty.family) {
        case PenaltyFamily::Zero:
            out << "family = \"zero\"\n";
            break;
        case PenaltyFamily::Constant:
            out << "family = \"constant\"\n";
            out << "c = " << format_double(model.penalty.c) << "\n";
            break;
        case PenaltyFamily::QuadraticDrift:
            out << "family = \"quadratic_drift\"\n";
            out << "eta = " << format_double(model.penalty.eta) << "\n";
            break;
        case PenaltyFamily::Table: {
            out << "family = \"table\"\n";
            out << "values = [";
            for (long i = 0; i < model.penalty.table.rows(); ++i) {
                if (i) out << ", ";
                out << "[";
                for (long j = 0; j < model.penalty.table.cols(); ++j) {
                    if (j) out << ", ";
                    out << format_double(model.penalty.table(i, j));
                }
                out << "]";
            }
            out << "]\n";
            break;
        }
    }
    out << "\n";

    out << "[payoff]\n";
    switch (model.payoff.family) {
        case PayoffFamily::Quadratic:
            out << "family = \"quadratic\"\n";
            write_vec(out, "center", model.payoff.center);
            break;
        case PayoffFamily::Absolute:
            out << "family = \"absolute\"\n";
            write_vec(out, "center", model.payoff.center);
            break;
        case PayoffFamily::Call:
            out << "family = \"call\"\n";
            out << "strike = " << format_double(model.payoff.strike) << "\n";
            out << "width = " << format_double(model.payoff.width) << "\n";
            break;
        case PayoffFamily::IndicatorSmoothed:
            out << "family = \"indicator_smoothed\"\n";
            out << "strike = " << format_double(model.payoff.strike) << "\n";
            out << "width = " << format_double(model.payoff.width) << "\n";
            break;
        case PayoffFamily::Table:
            out << "family = \"table\"\n";
            write_vec(out, "values", model.payoff.table);
            break;
    }
    out << "scale = " << format_double(model.payoff.scale) << "\n";
    return out.str();
}

Control load_control_file(const std::string& path, const Model& model) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open control file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const TomlDoc doc = detail::parse_toml(buf.str());
    const auto& c = require_section(doc, "control");
    Control control;
    control.nodes = detail::get_int_array(c, "control", "nodes");
    const auto it = doc.table_arrays.find("control.intervals");
    if (it == doc.table_arrays.end())
        throw ParseError(c.line, "no [[control.intervals]] blocks");
    for (const auto& t : it->second)
        control.selectors.push_back(detail::get_int_array(t, "control.intervals", "selector"));
    control.validate(model.time, model.space, model.gamma);
    return control;
}

std::string serialize_control(const Control& control) {
    std::ostringstream out;
    out << "[control]\n";
    out << "nodes = [";
    for (std::size_t i = 0; i < control.nodes.size(); ++i) {
        if (i) out << ", ";
        out << control.nodes[i];
    }
    out << "]\n\n";
    for (const auto& sel : control.selectors) {
        out << "[[control.intervals]]\n";
        out << "selector = [";
        for (std::size_t i = 0; i < sel.size(); ++i) {
            if (i) out << ", ";
            out << sel[i];
        }
        out << "]\n\n";
    }
    return out.str();
}

}  // namespace nldp
