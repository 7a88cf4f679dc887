#include "nonlocal_dp/csv.hpp"

#include "nonlocal_dp/format.hpp"

#include <fstream>
#include <sstream>

namespace nldp {

std::string solve_csv(const SolveResult& result, const Model& model, bool level0_only) {
    std::ostringstream out;
    out << "t,x1";
    if (model.space.n == 2) out << ",x2";
    out << ",value,policy_index\n";
    const std::size_t last = level0_only ? 1 : result.levels.size();
    for (std::size_t k = 0; k < last; ++k) {
        const auto& level = result.levels[k];
        for (long c = 0; c < level.values.size(); ++c) {
            const Vec x = model.space.point(c);
            out << format_double(level.t);
            for (long i = 0; i < x.size(); ++i) out << ',' << format_double(x[i]);
            out << ',' << format_double(level.values[c]) << ','
                << (level.policy.empty() ? -1 : level.policy[c]) << '\n';
        }
    }
    return out.str();
}

std::string convergence_csv(std::span<const ConvergenceRow> rows) {
    std::ostringstream out;
    out << "level,dx,dt,sup_error,observed_order\n";
    for (const auto& row : rows) {
        out << row.level << ',' << format_double(row.dx) << ',' << format_double(row.dt) << ','
            << format_double(row.sup_error) << ',' << format_double(row.observed_order) << '\n';
    }
    return out.str();
}

std::string estimate_csv_header() { return "quantity,r,y,mean,se,n_paths,seed\n"; }

std::string estimate_csv_row(const std::string& quantity, double r, const Vec& y,
                             const McEstimate& estimate, std::uint64_t seed) {
    std::ostringstream out;
    out << quantity << ',' << format_double(r) << ',';
    for (long i = 0; i < y.size(); ++i) {
        if (i) out << ';';
        out << format_double(y[i]);
    }
    out << ',' << format_double(estimate.mean) << ',' << format_double(estimate.se) << ','
        << estimate.n_paths << ',' << seed << '\n';
    return out.str();
}

std::string paths_csv(std::span<const PathSample> paths, const Model& model) {
    std::ostringstream out;
    out << "path_index,t,x1";
    if (model.space.n == 2) out << ",x2";
    out << ",penalty_acc\n";
    for (std::size_t p = 0; p < paths.size(); ++p) {
        const auto& path = paths[p];
        double acc = 0.0;
        for (std::size_t k = 0; k < path.times.size(); ++k) {
            if (k > 0) acc += path.penalty_increments[k - 1];
            out << p << ',' << format_double(path.times[k]);
            for (long i = 0; i < path.states[k].size(); ++i)
                out << ',' << format_double(path.states[k][i]);
            out << ',' << format_double(acc) << '\n';
        }
    }
    return out.str();
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open output file: " + path);
    out << contents;
    if (!out) throw Error("failed writing output file: " + path);
}

}  // namespace nldp
