#pragma once

#include "certrom/types.hpp"

namespace certrom {

/// A state-based model: parameter -> state trajectory -> output signal.
///
/// Implementations guarantee eval_output(mu) == output(eval_state(mu)).
class StateModel {
 public:
  virtual ~StateModel() = default;

  virtual Trajectory eval_state(const Parameter& mu) const = 0;
  virtual OutputSignal output(const Trajectory& state) const = 0;
  virtual OutputSignal eval_output(const Parameter& mu) const { return output(eval_state(mu)); }
};

/// A state-based model that also bounds its own output error w.r.t. the full-order model.
class CertifiedModel : public StateModel {
 public:
  virtual double est_output(const Parameter& mu) const = 0;
};

}  // namespace certrom
