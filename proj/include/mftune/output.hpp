#ifndef MFTUNE_OUTPUT_HPP
#define MFTUNE_OUTPUT_HPP

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "mftune/bench.hpp"

namespace mftune {

/// trial,formulation,iter,x1,x2,x3,y_noisy,f_true,r_t,R_t,r_star_t,diverged_flag
void write_results_csv(std::ostream& out, const CampaignResult& result);
void write_aggregates_csv(std::ostream& out, const CampaignResult& result);
/// One row per trial with a bound report.
void write_bounds_csv(std::ostream& out, const CampaignResult& result);
/// Sampled gains, optimum, baseline regret and fitted hyperparameters.
void write_trials_csv(std::ostream& out, const CampaignResult& result);
void write_metadata_json(std::ostream& out, const CampaignResult& result);

/// Two-panel regret figure (best instantaneous, cumulative) with one-sigma
/// error bars per formulation; a dashed line marks the mean baseline regret
/// when present.
std::string regret_figure_svg(const CampaignResult& result, const std::string& title);

/// Writes results.csv, aggregates.csv, trials.csv, metadata.json,
/// regret.svg and, when any trial has a bound report, bounds.csv. Throws
/// InvalidInput for an empty formulation list before touching the directory.
std::vector<std::filesystem::path> emit_outputs(const CampaignResult& result, const std::filesystem::path& dir);

/// Decimal text that round-trips the double exactly.
std::string format_number(double value);

} // namespace mftune

#endif // MFTUNE_OUTPUT_HPP
