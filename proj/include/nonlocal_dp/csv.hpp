#ifndef NONLOCAL_DP_CSV_HPP
#define NONLOCAL_DP_CSV_HPP

#include "nonlocal_dp/mc.hpp"
#include "nonlocal_dp/pde.hpp"

#include <span>
#include <string>

namespace nldp {

/// Shortest round-trip decimal form; identical bytes for identical doubles.
std::string format_double(double v);

/// Header `t,x1[,x2],value,policy_index`, one row per (level, cell).
std::string solve_csv(const SolveResult& result, const Model& model, bool level0_only);

/// Header `level,dx,dt,sup_error,observed_order`.
std::string convergence_csv(std::span<const ConvergenceRow> rows);

/// Header `quantity,r,y,mean,se,n_paths,seed`. Components of y join with ';'.
std::string estimate_csv_header();
std::string estimate_csv_row(const std::string& quantity, double r, const Vec& y,
                             const McEstimate& estimate, std::uint64_t seed);

/// Header `path_index,t,x1[,x2],penalty_acc`, one row per recorded node.
std::string paths_csv(std::span<const PathSample> paths, const Model& model);

void write_file(const std::string& path, const std::string& contents);

}  // namespace nldp

#endif
