#include <cmath>

#include "vvlab/causal.hpp"
#include "vvlab/error.hpp"

namespace vvlab::causal {

DeltaCurve delta_analysis(const model::ActivationCache& strike, const model::ActivationCache& gutter,
                          const model::ModelConfig& config) {
  DeltaCurve curve;
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    const auto hook = model::HookPoint::resid_post(l);
    const Tensor& a = strike.at(hook);
    const Tensor& b = gutter.at(hook);
    if (a.shape() != b.shape()) {
      throw CacheError("delta_analysis: " + hook.to_string() + " shapes differ: " + shape_to_string(a.shape()) +
                       " vs " + shape_to_string(b.shape()));
    }
    double total = 0.0, cls = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r) {
      const auto ra = a.row(r), rb = b.row(r);
      double sq = 0.0;
      for (std::size_t j = 0; j < ra.size(); ++j) {
        const double d = static_cast<double>(ra[j]) - rb[j];
        sq += d * d;
      }
      const double norm = std::sqrt(sq);
      total += norm;
      if (r == 0) cls = norm;
    }
    curve.avg_l2.push_back(static_cast<float>(total / static_cast<double>(a.rows())));
    curve.cls_l2.push_back(static_cast<float>(cls));
  }
  return curve;
}

}  // namespace vvlab::causal
