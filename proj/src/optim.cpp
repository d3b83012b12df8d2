#include "camrl/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace camrl::num {

Parameter& ParamStore::create(const std::string& name, Array init) {
    if (by_name_.count(name)) throw std::invalid_argument("ParamStore: duplicate parameter " + name);
    params_.push_back(std::make_unique<Parameter>(name, std::move(init)));
    Parameter* p = params_.back().get();
    by_name_[name] = p;
    return *p;
}

Parameter& ParamStore::get(const std::string& name) {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw std::out_of_range("ParamStore: unknown parameter " + name);
    return *it->second;
}

const Parameter& ParamStore::get(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw std::out_of_range("ParamStore: unknown parameter " + name);
    return *it->second;
}

std::vector<Parameter*> ParamStore::all() {
    std::vector<Parameter*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(p.get());
    return out;
}

std::vector<const Parameter*> ParamStore::all() const {
    std::vector<const Parameter*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(p.get());
    return out;
}

void ParamStore::zero_grad() {
    for (auto& p : params_) p->zero_grad();
}

void ParamStore::copy_values_from(const ParamStore& other) {
    if (other.params_.size() != params_.size()) {
        throw std::invalid_argument("ParamStore::copy_values_from: parameter count mismatch");
    }
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const Parameter& src = *other.params_[i];
        Parameter& dst = *params_[i];
        if (src.name != dst.name || src.value.shape != dst.value.shape) {
            throw std::invalid_argument("ParamStore::copy_values_from: mismatch at " + dst.name);
        }
        dst.value.data = src.value.data;
    }
}

void Adam::step(ParamStore& params) {
    t_ += 1;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (Parameter* p : params.all()) {
        for (double g : p->grad.data) {
            if (!std::isfinite(g)) {
                throw std::runtime_error("Adam: non-finite gradient in parameter '" + p->name +
                                         "' at step " + std::to_string(t_));
            }
        }
        auto it = slots_.find(p->name);
        if (it == slots_.end()) {
            it = slots_.emplace(p->name, Slot{Array(p->value.shape, 0.0), Array(p->value.shape, 0.0)})
                     .first;
        }
        Slot& s = it->second;
        for (std::size_t i = 0; i < p->value.numel(); ++i) {
            double g = p->grad.data[i];
            s.m.data[i] = cfg_.beta1 * s.m.data[i] + (1.0 - cfg_.beta1) * g;
            s.v.data[i] = cfg_.beta2 * s.v.data[i] + (1.0 - cfg_.beta2) * g * g;
            double mhat = s.m.data[i] / bc1;
            double vhat = s.v.data[i] / bc2;
            p->value.data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

std::map<std::string, Array> Adam::export_state() const {
    std::map<std::string, Array> out;
    for (const auto& [name, slot] : slots_) {
        out["adam.m." + name] = slot.m;
        out["adam.v." + name] = slot.v;
    }
    return out;
}

void Adam::import_state(const std::map<std::string, Array>& state, std::uint64_t t) {
    t_ = t;
    slots_.clear();
    for (const auto& [key, arr] : state) {
        if (key.rfind("adam.m.", 0) == 0) {
            std::string name = key.substr(7);
            auto vit = state.find("adam.v." + name);
            if (vit == state.end()) throw std::invalid_argument("Adam state missing v for " + name);
            slots_[name] = Slot{arr, vit->second};
        }
    }
}

}  // namespace camrl::num
