#pragma once

// Training trace export. CSV columns:
//   epoch, loss, rmse, <theta names...>, grad_norm2, grad_norm_inf,
//   regret, avg_regret, regret_bound

#include <string>

#include "pann/dataset_io.hpp"
#include "pann/trace.hpp"
#include "pann/training.hpp"

namespace pann {

inline std::string trace_csv(const TrainingTrace& trace, const RegretLedger* ledger = nullptr,
                             const RegretBoundTerms* bound = nullptr) {
  std::string out = "epoch,loss,rmse";
  for (const auto& n : trace.names) out += "," + n;
  out += ",grad_norm2,grad_norm_inf,regret,avg_regret,regret_bound\n";
  for (std::size_t t = 0; t < trace.epochs.size(); ++t) {
    const EpochRecord& r = trace.epochs[t];
    out += std::to_string(r.epoch) + "," + format_double(r.loss) + "," + format_double(std::sqrt(2.0 * r.loss));
    for (Eigen::Index i = 0; i < r.theta.size(); ++i) out += "," + format_double(r.theta(i));
    out += "," + format_double(r.grad_norm2) + "," + format_double(r.grad_norm_inf);
    if (ledger != nullptr && t < ledger->regret.size()) {
      out += "," + format_double(ledger->regret[t]) + "," + format_double(ledger->avg_regret[t]);
    } else {
      out += ",,";
    }
    out += bound != nullptr ? "," + format_double(bound->at(static_cast<double>(r.epoch))) : ",";
    out += "\n";
  }
  return out;
}

}  // namespace pann
