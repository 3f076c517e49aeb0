// Serialization helpers shared by the experiment runners and the repro bundle.
#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "apsde/ap_analysis.hpp"
#include "apsde/estimators.hpp"
#include "apsde/evolution.hpp"
#include "apsde/experiment.hpp"
#include "apsde/table.hpp"

namespace apsde::detail {

/// Finite values as JSON numbers, others as "nan" / "inf" / "-inf".
Json num(double v);
Json numbers(std::span<const double> v);
Json matrix(const Eigen::MatrixXd& m);
Json estimate(const McEstimate& e);
Json witness(const Witness& w);
Json ap_report(const AlmostPeriodReport& r);
Table curve_table(const AlmostPeriodReport& r);
Json falsification(const MsFalsification& f);
Json lemma(const LemmaReport& r);
Table lemma_table(const LemmaReport& r, std::span<const double> times);
Json stability(const StabilityEstimate& s);
Json header(const std::string& experiment, std::uint64_t seed);

/// Independent seed for sub-experiment k of a run seeded with `seed`.
std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t k);

/// Sets verdict and exit code, lists the artifacts and appends report.json.
void finish(RunResult& r, const std::string& verdict, int code);

} // namespace apsde::detail
