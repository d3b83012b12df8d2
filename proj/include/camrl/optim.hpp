#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "camrl/autodiff.hpp"

namespace camrl::num {

// Ordered, name-addressed parameter set. Pointers stay stable across inserts.
class ParamStore {
public:
    Parameter& create(const std::string& name, Array init);
    Parameter& get(const std::string& name);
    const Parameter& get(const std::string& name) const;
    bool has(const std::string& name) const { return by_name_.count(name) > 0; }
    std::vector<Parameter*> all();
    std::vector<const Parameter*> all() const;
    void zero_grad();
    std::size_t count() const { return params_.size(); }
    // Value copy; shapes and names must match exactly (target-network sync).
    void copy_values_from(const ParamStore& other);

private:
    std::vector<std::unique_ptr<Parameter>> params_;
    std::map<std::string, Parameter*> by_name_;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Standard Adam with bias correction. Moments are kept per parameter name so
// the state survives checkpointing.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    // Applies one update from the parameters' accumulated grads, then
    // increments the shared step counter. Throws on non-finite gradients.
    void step(ParamStore& params);

    std::uint64_t step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

    // Checkpoint plumbing.
    std::map<std::string, Array> export_state() const;
    void import_state(const std::map<std::string, Array>& state, std::uint64_t t);

private:
    struct Slot {
        Array m, v;
    };
    AdamConfig cfg_;
    std::map<std::string, Slot> slots_;
    std::uint64_t t_ = 0;
};

}  // namespace camrl::num
