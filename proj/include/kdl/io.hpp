#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "kdl/genlab.hpp"
#include "kdl/gibbs.hpp"
#include "kdl/kawasaki.hpp"
#include "kdl/observe.hpp"
#include "kdl/stats.hpp"

namespace kdl {

// Shortest text that reads back to the same double (%.17g).
std::string fmt(double v);

// One configuration per line: [[id, x1, ..., xd], ...].
void write_ensemble_jsonl(const std::filesystem::path& path, const Ensemble& e);
Ensemble read_ensemble_jsonl(const std::filesystem::path& path, const Box& box);

struct SummaryRow {
  std::string quantity;
  double estimate;
  double stderr_;
  std::size_t n;
};
// Header: quantity,estimate,stderr,n
void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows);

// Header: time,particle,from_1..from_d,to_1..to_d
void write_event_log_csv(const std::filesystem::path& path, const std::vector<JumpEvent>& events, int dim);

// Header: time,count,obs_0,...
void write_observations_csv(const std::filesystem::path& path, const std::vector<Observation>& rows,
                            std::size_t n_obs);

// <stem>.csv (epsilon,l2err,stderr,quad_err), <stem>.json (summary with the
// fitted slope) and <stem>.dat (gnuplot: log eps, log err).
void write_convergence(const std::filesystem::path& dir, const std::string& stem, const ConvergenceReport& r);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace kdl
