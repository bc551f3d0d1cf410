#include "epidelay/calibration.hpp"

#include "epidelay/error.hpp"
#include "epidelay/numerics.hpp"

#include <json.hpp>

#include <cmath>
#include <sstream>

namespace epidelay {

void SbcConfig::validate() const {
  scenario.validate();
  fit_options.validate();
  if (replicates < 1) throw ValidationError("sbc: replicates must be positive");
}

SbcSummary run_sbc(const SbcConfig& config,
                   const std::function<void(const SbcReplicate&)>& progress) {
  config.validate();
  SbcSummary s;
  s.truth_mean = config.scenario.true_dist.mean();
  double sum_err = 0.0;
  double sum_sq = 0.0;
  int scored = 0;
  for (int i = 0; i < config.replicates; ++i) {
    SbcReplicate row;
    row.index = i;
    row.seed = numerics::derive_seed(config.seed, static_cast<std::uint64_t>(i));
    OutbreakScenario sc = config.scenario;
    sc.seed = row.seed;
    const auto ll = simulate_linelist(sc).linelist;
    row.n_observed = ll.cases.size();
    FitOptions opts = config.fit_options;
    opts.seed = numerics::derive_seed(row.seed, 1);
    try {
      const auto fit = epidelay::fit(ll, config.family, config.adjustments, opts);
      row.mean = fit.summary.mean;
      row.converged = fit.converged();
      row.covered = row.mean.lower <= s.truth_mean && s.truth_mean <= row.mean.upper;
      const double err = row.mean.point - s.truth_mean;
      sum_err += err;
      sum_sq += err * err;
      ++scored;
    } catch (const Error&) {
      ++s.failed;
    }
    if (!config.candidates.empty()) {
      std::vector<FitResult> fits;
      FitOptions mle = opts;
      mle.method = FitMethod::MLE;
      for (Family f : config.candidates) {
        try {
          fits.push_back(fit_mle(ll, f, config.adjustments, mle));
        } catch (const Error&) {
        }
      }
      if (!fits.empty()) row.selected = compare_models(fits).front().family;
    }
    s.covered += row.covered ? 1 : 0;
    s.not_converged += row.converged ? 0 : 1;
    s.selected_true += row.selected == config.scenario.true_dist.family() ? 1 : 0;
    if (progress) progress(row);
    s.rows.push_back(std::move(row));
  }
  s.replicates = config.replicates;
  s.coverage = static_cast<double>(s.covered) / static_cast<double>(s.replicates);
  if (scored > 0) {
    s.bias = sum_err / scored;
    s.rmse = std::sqrt(sum_sq / scored);
  }
  return s;
}

std::string sbc_csv(const SbcSummary& summary) {
  std::ostringstream out;
  out << "replicate,seed,n,mean,lower,upper,covered,converged,selected\n";
  for (const auto& r : summary.rows) {
    out << r.index << ',' << r.seed << ',' << r.n_observed << ',' << format_number(r.mean.point)
        << ',' << format_number(r.mean.lower) << ',' << format_number(r.mean.upper) << ','
        << (r.covered ? 1 : 0) << ',' << (r.converged ? 1 : 0) << ','
        << (r.selected ? std::string(family_name(*r.selected)) : "") << '\n';
  }
  return out.str();
}

std::string sbc_summary_json(const SbcSummary& s) {
  nlohmann::json doc = {{"truth_mean", s.truth_mean},
                        {"replicates", s.replicates},
                        {"covered", s.covered},
                        {"coverage", s.coverage},
                        {"not_converged", s.not_converged},
                        {"failed", s.failed},
                        {"bias", s.bias},
                        {"rmse", s.rmse},
                        {"selected_true", s.selected_true}};
  return doc.dump(2) + "\n";
}

} // namespace epidelay
