#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <exception>
#include <random>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include "gslam/error.hpp"
#include "gslam/geometry.hpp"
#include "gslam/motion_model.hpp"
#include "gslam/random.hpp"
#include "gslam/sensor_model.hpp"

namespace gslam {

/// A per-particle map representation the filter can drive. `incorporate`
/// folds one scan into the map seen from `pose` and returns the per-beam
/// marginals used as importance evidence.
template <class M>
concept MapModel = requires(const M& model, typename M::State& state, const Pose2D& pose, const LaserScan& scan,
                            Rng& rng) {
  { model.initial_state() } -> std::same_as<typename M::State>;
  { model.incorporate(state, pose, scan, rng) } -> std::same_as<std::vector<double>>;
};

template <class State>
struct Particle {
  std::vector<Pose2D> trajectory;  // initial pose followed by one pose per step
  State map;
  double log_weight = 0.0;
};

struct FilterConfig {
  std::size_t particles = 8;
  std::size_t gen_points = 10;
  double p_thr_rel = 0.05;
  double ess_threshold = 0.5;
  std::size_t beam_stride = 2;
  std::uint64_t seed = 1;
  std::size_t threads = 1;

  void validate() const {
    if (particles < 1) throw InvalidArgument("FilterConfig: particles must be >= 1");
    if (!(ess_threshold > 0.0 && ess_threshold <= 1.0)) throw InvalidArgument("FilterConfig: ess_threshold must lie in (0, 1]");
    if (beam_stride < 1) throw InvalidArgument("FilterConfig: beam_stride must be >= 1");
    if (!(p_thr_rel >= 0.0)) throw InvalidArgument("FilterConfig: p_thr_rel must be >= 0");
  }
};

struct MotionSetup {
  VehicleParams vehicle;
  ControlNoise noise;
};

// Stream id reserved for the resampling draw of each step.
inline constexpr std::uint64_t kResampleStream = std::numeric_limits<std::uint64_t>::max();

template <class State>
void predict(Particle<State>& p, const Control& u, double dt, const MotionSetup& motion, Rng& rng) {
  if (!(dt > 0.0)) throw InvalidArgument("predict: dt must be > 0");
  const Control noisy = sample_control(u, motion.noise, rng);
  p.trajectory.push_back(propagate(p.trajectory.back(), noisy, dt, motion.vehicle));
}

// log_weight += sum log Z over the processed beams.
template <class State>
void weigh(Particle<State>& p, std::span<const double> beam_marginals) {
  double acc = 0.0;
  for (double z : beam_marginals) {
    if (!(z > 0.0) || !std::isfinite(z)) throw UnderflowError("weigh: non-positive beam marginal");
    acc += std::log(z);
  }
  p.log_weight += acc;
}

inline double effective_sample_size(std::span<const double> weights) {
  double s2 = 0.0;
  for (double w : weights) s2 += w * w;
  return s2 > 0.0 ? 1.0 / s2 : 0.0;
}

/// Residual systematic resampling driven by a single draw u in [0, 1/N).
/// Particle i is replicated ceil(N (C_i - u)) - ceil(N (C_{i-1} - u)) times,
/// C being the cumulative weights, which is floor(N w_i) or floor(N w_i) + 1.
inline std::vector<std::size_t> rsr_counts(std::span<const double> weights, std::size_t n, double u) {
  std::vector<std::size_t> counts(weights.size(), 0);
  if (weights.empty()) return counts;
  const double nd = static_cast<double>(n);
  double cumulative = 0.0;
  double prev_edge = 0.0;  // ceil(N (0 - u)) == 0 for u in [0, 1/N)
  for (std::size_t i = 0; i < weights.size(); ++i) {
    cumulative += weights[i];
    const bool last = i + 1 == weights.size();
    const double edge = last ? nd : std::clamp(std::ceil(nd * (cumulative - u)), 0.0, nd);
    counts[i] = static_cast<std::size_t>(std::max(0.0, edge - prev_edge));
    prev_edge = std::max(prev_edge, edge);
  }
  return counts;
}

inline std::vector<std::size_t> rsr_resample(std::span<const double> weights, std::size_t n, Rng& rng) {
  if (n < 1) throw InvalidArgument("rsr_resample: N must be >= 1");
  std::uniform_real_distribution<double> unif(0.0, 1.0 / static_cast<double>(n));
  double u = unif(rng);
  if (u >= 1.0 / static_cast<double>(n)) u = 0.0;
  return rsr_counts(weights, n, u);
}

/// Normalizes log weights in place so that sum exp(log_weight) == 1 and
/// returns the linear weights. Diverged particles carry -inf.
template <class State>
std::vector<double> normalize_weights(std::vector<Particle<State>>& ps) {
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& p : ps) top = std::max(top, p.log_weight);
  std::vector<double> w(ps.size(), 0.0);
  if (!std::isfinite(top)) return w;
  double sum = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    w[i] = std::isfinite(ps[i].log_weight) ? std::exp(ps[i].log_weight - top) : 0.0;
    sum += w[i];
  }
  for (std::size_t i = 0; i < ps.size(); ++i) {
    w[i] /= sum;
    ps[i].log_weight = w[i] > 0.0 ? std::log(w[i]) : -std::numeric_limits<double>::infinity();
  }
  return w;
}

struct StepReport {
  std::vector<double> weights;  // normalized, before resampling
  double ess = 0.0;
  bool resampled = false;
  std::vector<std::size_t> parents;  // filled when resampled: slot -> pre-resampling index
  std::size_t diverged = 0;
};

/// One filter step: per particle predict, incorporate the scan into its map
/// and weigh; then normalize and resample when ESS < ess_threshold * N.
template <MapModel Model>
StepReport gslam_step(std::vector<Particle<typename Model::State>>& ps, const Model& model, const MotionSetup& motion,
                      const Control& u, double dt, const LaserScan& scan, const FilterConfig& cfg,
                      std::uint64_t step) {
  using State = typename Model::State;
  if (ps.empty()) throw InvalidArgument("gslam_step: no particles");

  const auto work = [&](std::size_t i) {
    Particle<State>& p = ps[i];
    Rng rng = substream(cfg.seed, i, step);
    predict(p, u, dt, motion, rng);
    if (!std::isfinite(p.log_weight)) return;
    try {
      const std::vector<double> marginals = model.incorporate(p.map, p.trajectory.back(), scan, rng);
      weigh(p, marginals);
    } catch (const UnderflowError&) {
      p.log_weight = -std::numeric_limits<double>::infinity();
    }
  };

  const std::size_t threads = std::clamp<std::size_t>(cfg.threads, 1, ps.size());
  if (threads == 1) {
    for (std::size_t i = 0; i < ps.size(); ++i) work(i);
  } else {
    std::vector<std::jthread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < ps.size(); i += threads) work(i);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    pool.clear();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  StepReport report;
  for (const auto& p : ps)
    if (!std::isfinite(p.log_weight)) ++report.diverged;
  if (report.diverged == ps.size()) throw DivergenceError(step, "every particle's marginal underflowed");

  report.weights = normalize_weights(ps);
  report.ess = effective_sample_size(report.weights);
  if (ps.size() > 1 && report.ess < cfg.ess_threshold * static_cast<double>(ps.size())) {
    Rng rng = substream(cfg.seed, kResampleStream, step);
    const std::vector<std::size_t> counts = rsr_resample(report.weights, ps.size(), rng);
    std::vector<Particle<State>> next;
    next.reserve(ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) {
      for (std::size_t c = 0; c + 1 < counts[i]; ++c) next.push_back(ps[i]);
      if (counts[i] > 0) next.push_back(std::move(ps[i]));
      report.parents.insert(report.parents.end(), counts[i], i);
    }
    const double uniform = -std::log(static_cast<double>(next.size()));
    for (auto& p : next) p.log_weight = uniform;
    ps = std::move(next);
    report.resampled = true;
  }
  return report;
}

/// Index of the largest weight; ties go to the lowest index.
inline std::size_t argmax_weight(std::span<const double> weights) {
  if (weights.empty()) throw InvalidArgument("argmax_weight: no weights");
  std::size_t best = 0;
  for (std::size_t i = 1; i < weights.size(); ++i)
    if (weights[i] > weights[best]) best = i;
  return best;
}

template <class State>
const std::vector<Pose2D>& best_trajectory(const std::vector<Particle<State>>& ps, std::span<const double> weights) {
  if (ps.empty()) throw InvalidArgument("best_trajectory: no particles");
  return ps[argmax_weight(weights)].trajectory;
}

template <class State>
const std::vector<Pose2D>& best_trajectory(const std::vector<Particle<State>>& ps) {
  std::vector<double> lw;
  lw.reserve(ps.size());
  for (const auto& p : ps) lw.push_back(p.log_weight);
  return best_trajectory(ps, lw);
}

// Weighted mean pose per time index; headings averaged on the unit circle.
template <class State>
std::vector<Pose2D> mean_trajectory(const std::vector<Particle<State>>& ps, std::span<const double> weights) {
  if (ps.empty()) throw InvalidArgument("mean_trajectory: no particles");
  const std::size_t len = ps.front().trajectory.size();
  std::vector<Pose2D> out;
  out.reserve(len);
  for (std::size_t t = 0; t < len; ++t) {
    double x = 0.0, y = 0.0, c = 0.0, s = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const Pose2D& q = ps[i].trajectory[t];
      x += weights[i] * q.x();
      y += weights[i] * q.y();
      c += weights[i] * std::cos(q.phi());
      s += weights[i] * std::sin(q.phi());
    }
    out.emplace_back(x, y, std::atan2(s, c));
  }
  return out;
}

/// Owns the particle set and the per-step bookkeeping.
template <MapModel Model>
class ParticleFilter {
 public:
  using State = typename Model::State;

  ParticleFilter(Model model, MotionSetup motion, FilterConfig cfg, const Pose2D& start)
      : model_(std::move(model)), motion_(std::move(motion)), cfg_(cfg) {
    cfg_.validate();
    motion_.vehicle.validate();
    particles_.resize(cfg_.particles);
    for (auto& p : particles_) {
      p.trajectory.push_back(start);
      p.map = model_.initial_state();
      p.log_weight = -std::log(static_cast<double>(cfg_.particles));
    }
    estimate_weights_.assign(cfg_.particles, 1.0 / static_cast<double>(cfg_.particles));
  }

  const StepReport& step(const Control& u, double dt, const LaserScan& scan) {
    last_ = gslam_step(particles_, model_, motion_, u, dt, scan, cfg_, steps_);
    ++steps_;
    if (last_.resampled) {
      // Children inherit their parent's weight for estimate selection.
      estimate_weights_.clear();
      for (std::size_t parent : last_.parents) estimate_weights_.push_back(last_.weights[parent]);
      ++resamples_;
    } else {
      estimate_weights_ = last_.weights;
    }
    return last_;
  }

  const std::vector<Particle<State>>& particles() const { return particles_; }
  std::vector<Particle<State>>& particles() { return particles_; }
  const Model& model() const { return model_; }
  const FilterConfig& config() const { return cfg_; }
  std::size_t steps() const { return steps_; }
  std::size_t resamples() const { return resamples_; }

  std::vector<double> weights() const {
    std::vector<double> w;
    w.reserve(particles_.size());
    for (const auto& p : particles_) w.push_back(std::exp(p.log_weight));
    return w;
  }

  // Weights used to pick the reported estimate; survive resampling.
  const std::vector<double>& estimate_weights() const { return estimate_weights_; }
  std::size_t best_index() const { return argmax_weight(estimate_weights_); }
  const Particle<State>& best_particle() const { return particles_[best_index()]; }
  const std::vector<Pose2D>& best_trajectory() const { return gslam::best_trajectory(particles_, estimate_weights_); }
  std::vector<Pose2D> mean_trajectory() const { return gslam::mean_trajectory(particles_, weights()); }

 private:
  Model model_;
  MotionSetup motion_;
  FilterConfig cfg_;
  std::vector<Particle<State>> particles_;
  std::vector<double> estimate_weights_;
  StepReport last_;
  std::size_t steps_ = 0;
  std::size_t resamples_ = 0;
};

}  // namespace gslam
