// SPDX-License-Identifier: Apache-2.0
//
// Fault types, fault plans and the stage-hook injector.

#ifndef BFI_FAULT_HPP
#define BFI_FAULT_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "bfi/ads.hpp"
#include "bfi/registry.hpp"

namespace bfi {

enum class Rule { set_max, set_min, double_value, halve, set_category, set_value, bitflip };

/// Corruption of one registered variable.
struct FaultType {
  VarId var = VarId::throttle;
  Rule rule = Rule::set_max;
  int category = 0;    // set_category
  double value = 0.0;  // set_value
  int bit = 0;         // bitflip, 0..63
  int bit2 = -1;       // second flipped bit for double flips, -1 for a single flip

  /// "<variable>:<rule>", e.g. "control.throttle:max", "perception.lane_type:cat=disappear",
  /// "planning.obstacle_pos:value=2", "control.brake:bit=62", "control.brake:bit=3+40".
  [[nodiscard]] std::string name() const;
  friend bool operator==(const FaultType&, const FaultType&) = default;
};

/// Throws std::invalid_argument on unknown variables or rules.
FaultType parse_fault_type(const std::string& name);

/// Fixed fault types: max/min for bounded variables, double/halve for
/// unbounded ones, every category for categorical ones.
[[nodiscard]] const std::vector<FaultType>& fault_catalog();

/// Value after corruption. Fixed rules only; random rules go through the injector.
[[nodiscard]] double apply_rule(const FaultType& f, double current);

[[nodiscard]] double flip_bit(double value, int bit);

/// Flips n_bits in {1, 2} distinct, uniformly drawn bit positions of the
/// IEEE-754 binary64 representation. Deterministic per seed.
[[nodiscard]] double flip_random_bits(double value, int n_bits, std::uint64_t seed);

enum class FaultModel { OneFixed, MFixed, OneRandom, MRandom, BitFlip };

std::string to_string(FaultModel m);
FaultModel fault_model_from_string(const std::string& s);

/// What to corrupt, where and for how long. Random models store the targeted
/// variables in `types` (the rule is ignored) and draw values from `seed`.
struct FaultPlan {
  FaultModel model = FaultModel::OneFixed;
  std::size_t start = 0;
  std::size_t duration = 1;
  std::vector<FaultType> types;
  std::uint64_t seed = 0;

  [[nodiscard]] bool active(std::size_t scene) const {
    return scene >= start && scene < start + duration;
  }
  [[nodiscard]] std::uint64_t digest() const;
  /// Throws std::invalid_argument when the invariants do not hold.
  void validate(std::size_t scene_count) const;
};

/// Draws a plan: the duration is 1 for One* and BitFlip, uniform on [10, 100]
/// for M* models; the start is uniform with start + duration < scene_count.
/// Fixed models pick a catalog type, random models an injectable variable.
/// BitFlip flips one or two distinct bits with equal probability.
[[nodiscard]] FaultPlan random_plan(FaultModel model, std::size_t scene_count,
                                    std::mt19937_64& rng);

struct InjectionRecord {
  std::size_t scene = 0;
  VarId var = VarId::throttle;
  double old_value = 0.0;
  double new_value = 0.0;
};

/// Applies a plan inside the ADS loop and logs every corruption.
class Injector final : public StageHook {
 public:
  explicit Injector(FaultPlan plan);
  void on_stage(Stage stage, std::size_t scene, VarFrame& vars) override;

  [[nodiscard]] const std::vector<InjectionRecord>& log() const { return log_; }
  [[nodiscard]] const FaultPlan& plan() const { return plan_; }

 private:
  double random_value(VarId var, double current);

  FaultPlan plan_;
  std::mt19937_64 rng_;
  std::vector<InjectionRecord> log_;
};

}  // namespace bfi

#endif  // BFI_FAULT_HPP
