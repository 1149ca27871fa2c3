#pragma once

#include <cstddef>
#include <vector>

#include "att/arch.hpp"
#include "att/errors.hpp"
#include "att/matrix.hpp"
#include "att/nn.hpp"
#include "att/synth.hpp"

namespace att {

// Recorded student trajectory on the synthetic set: states[k+1] =
// sgd_step(states[k], grad(states[k], synth), lr). Holds everything the
// reverse sweep in meta_grad.hpp needs, so a tape outlives the synth it was
// unrolled from.
struct UnrollTape {
  Architecture arch;
  Matrix features;          // synthetic features at unroll time
  std::vector<int> labels;
  double lr = 0.0;
  std::vector<ParamVector> states;      // t_max + 1
  std::vector<ParamVector> step_grads;  // t_max, grads at states[0..t_max-1]
};

inline UnrollTape unroll(const Architecture& arch, const ParamVector& start,
                         const SyntheticDataset& synth, std::size_t t_max) {
  if (t_max < 1) throw DimensionError("unroll: t_max must be >= 1");
  UnrollTape tape;
  tape.arch = arch;
  tape.features = synth.features;
  tape.labels = synth.labels;
  tape.lr = synth.lr_student;
  tape.states.reserve(t_max + 1);
  tape.step_grads.reserve(t_max);
  tape.states.push_back(start);
  const LabeledBatch batch = synth.as_batch();
  for (std::size_t t = 0; t < t_max; ++t) {
    ParamVector g = grad(arch, tape.states.back(), batch);
    ParamVector next = sgd_step(tape.states.back(), g, tape.lr);
    if (!all_finite(next)) {
      throw DivergedError("unroll: non-finite student parameters", t + 1);
    }
    tape.step_grads.push_back(std::move(g));
    tape.states.push_back(std::move(next));
  }
  return tape;
}

// Normalized matching loss: ||pred - target||^2 / ||start - target||^2.
inline double match_loss(const ParamVector& pred, const ParamVector& start,
                         const ParamVector& target) {
  const double denom = squared_distance(start, target);
  if (denom <= 0.0) {
    throw DegenerateExpertError("match_loss: start equals target, loss undefined");
  }
  return squared_distance(pred, target) / denom;
}

// e_t = squared L2 distance of every tape state to the target, t = 0..t_max.
inline std::vector<double> distance_trace(const UnrollTape& tape, const ParamVector& target) {
  std::vector<double> trace;
  trace.reserve(tape.states.size());
  for (const auto& state : tape.states) trace.push_back(squared_distance(state, target));
  return trace;
}

}  // namespace att
