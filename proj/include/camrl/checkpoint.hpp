#pragma once

#include <map>
#include <string>

#include "camrl/array.hpp"
#include "camrl/optim.hpp"

namespace camrl::num {

// Flat key -> array map with shape headers plus string metadata, written as
// little-endian binary. Round-trips bit-exactly.
struct Checkpoint {
    std::map<std::string, std::string> meta;
    std::map<std::string, Array> arrays;

    void put_params(const ParamStore& params);
    // Loads values into existing parameters; throws on missing name or shape
    // mismatch.
    void load_params(ParamStore& params) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace camrl::num
