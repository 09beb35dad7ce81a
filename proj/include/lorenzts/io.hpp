#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lorenzts/mcmc.hpp"
#include "lorenzts/model.hpp"
#include "lorenzts/simulation.hpp"

namespace lorenzts::io {

/* Raw CSV contents: '#'-prefixed lines collected separately, in file order. */
struct Csv {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Csv read_csv(const std::string& path);

/* A generic table for writers; every emitted file re-parses via read_csv. */
struct Table {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

void write_table(const std::string& path, const Table& table);

/* Shortest round-trip decimal representation. */
std::string fmt_double(double x);

/*
 * Grouped-share ingestion. Header `period,n,q1,...,qK` holds shares;
 * `period,n,y1,...,yK` holds cumulative shares (also auto-detected for other
 * column names by rows being nondecreasing and ending at 1). An optional
 * comment line `#p=p0,p1,...,pK` supplies the population grid; interior-only
 * lists (K-1 values) are padded with the 0 and 1 endpoints. Share rows must
 * sum to 1 within 1e-6 and are renormalized exactly.
 */
GroupedSeries load_grouped_csv(const std::string& path);
void write_grouped_csv(const std::string& path, const GroupedSeries& data);

/* Ground-truth table for simulated data: latent path, parameters, Gini, Lorenz values. */
void write_truth_csv(const std::string& path, const SimTruth& truth,
                     const Eigen::VectorXd& p_grid);
SimTruth load_truth_csv(const std::string& path);

/*
 * Posterior draws, one row per retained draw. Columns: draw, the process
 * parameters (mu_j/rho_j for AR(1) fits, tau2_j always), psi, then latent
 * snapshot columns u_<t>_<j> which are filled only on snapshot rows and left
 * empty elsewhere.
 */
void write_draws_csv(const std::string& path, const PosteriorDraws& draws);
PosteriorDraws load_draws_csv(const std::string& path);

/* Plain numeric matrix with a named header. */
void write_matrix_csv(const std::string& path,
                      const std::vector<std::string>& header,
                      const Eigen::MatrixXd& m);
Eigen::MatrixXd load_matrix_csv(const std::string& path);

/*
 * Flat key=value configuration / metadata files. '#' comments and blank
 * lines are ignored; values keep internal whitespace.
 */
std::map<std::string, std::string> parse_config(const std::string& path);
void write_config(const std::string& path,
                  const std::map<std::string, std::string>& kv);

/* Comma-separated list helpers for config values. */
std::vector<double> parse_double_list(const std::string& text);
std::string join_double_list(const std::vector<double>& values);

}  // namespace lorenzts::io
