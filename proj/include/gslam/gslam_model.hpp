#pragma once

#include <cstddef>
#include <vector>

#include "gslam/particle_filter.hpp"
#include "gslam/scatter_map.hpp"
#include "gslam/sensor_model.hpp"

namespace gslam {

enum class WeightRule { evidence, neutral };

struct GSlamParams {
  SensorSpec sensor;
  GateConfig gate;
  InterpConfig interp;
  std::size_t gen_points = 10;  // per processed beam
  double p_thr_rel = 0.05;
  std::size_t beam_stride = 2;
  WeightRule weight = WeightRule::evidence;
};

/// Per-particle scattered-point map driven by the particle filter.
/// For every processed beam: draw gen_points candidates, then run the Bayes
/// update with them included; prune once the whole scan is in.
class GSlamModel {
 public:
  using State = ScatterMap;

  explicit GSlamModel(GSlamParams params) : params_(std::move(params)) {
    params_.sensor.validate();
    if (params_.beam_stride < 1) throw InvalidArgument("GSlamModel: beam_stride must be >= 1");
  }

  const GSlamParams& params() const { return params_; }

  State initial_state() const { return ScatterMap(); }

  std::vector<double> incorporate(State& map, const Pose2D& pose, const LaserScan& scan, Rng& rng) const {
    std::vector<double> marginals;
    const SensorSpec& spec = params_.sensor;
    if (scan.ranges.size() != spec.beam_count) throw InvalidArgument("incorporate: scan beam count mismatch");
    for (std::size_t i = 0; i < scan.ranges.size(); i += params_.beam_stride) {
      if (!scan.valid_beam(spec, i)) continue;
      const RangeBearing z = scan.beam(spec, i);
      if (params_.gen_points == 0) {
        if (map.empty()) continue;
        marginals.push_back(pick(beam_update(map, pose, z, spec.noise, params_.gate)));
        continue;
      }
      const auto fresh = generate_points(map, pose, z, params_.gen_points, spec.noise, params_.interp, rng);
      marginals.push_back(pick(beam_update(map, pose, z, spec.noise, params_.gate, fresh)));
    }
    if (!map.empty()) map.prune(params_.p_thr_rel);
    return marginals;
  }

 private:
  double pick(const BeamResult& r) const { return params_.weight == WeightRule::evidence ? r.evidence : r.marginal; }

  GSlamParams params_;
};

static_assert(MapModel<GSlamModel>);

}  // namespace gslam
