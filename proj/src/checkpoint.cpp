#include "camrl/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace camrl::num {

namespace {

constexpr char kMagic[8] = {'C', 'A', 'M', 'R', 'L', 'C', 'K', '1'};

void write_u64(std::ostream& os, std::uint64_t v) {
    char buf[8];
    std::memcpy(buf, &v, 8);
    os.write(buf, 8);
}

std::uint64_t read_u64(std::istream& is) {
    char buf[8];
    is.read(buf, 8);
    std::uint64_t v;
    std::memcpy(&v, buf, 8);
    return v;
}

void write_str(std::ostream& os, const std::string& s) {
    write_u64(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_str(std::istream& is) {
    std::uint64_t n = read_u64(is);
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    return s;
}

}  // namespace

void Checkpoint::put_params(const ParamStore& params) {
    for (const Parameter* p : params.all()) arrays[p->name] = p->value;
}

void Checkpoint::load_params(ParamStore& params) const {
    for (Parameter* p : params.all()) {
        auto it = arrays.find(p->name);
        if (it == arrays.end()) throw std::runtime_error("checkpoint: missing parameter " + p->name);
        if (it->second.shape != p->value.shape) {
            throw std::runtime_error("checkpoint: shape mismatch for " + p->name + ": file " +
                                     shape_str(it->second.shape) + " vs net " +
                                     shape_str(p->value.shape));
        }
        p->value.data = it->second.data;
    }
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    os.write(kMagic, 8);
    write_u64(os, ck.meta.size());
    for (const auto& [k, v] : ck.meta) {
        write_str(os, k);
        write_str(os, v);
    }
    write_u64(os, ck.arrays.size());
    for (const auto& [name, arr] : ck.arrays) {
        write_str(os, name);
        write_u64(os, arr.rank());
        for (std::size_t d : arr.shape) write_u64(os, d);
        os.write(reinterpret_cast<const char*>(arr.data.data()),
                 static_cast<std::streamsize>(arr.numel() * sizeof(double)));
    }
    if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0) {
        throw std::runtime_error("bad checkpoint magic in " + path);
    }
    Checkpoint ck;
    std::uint64_t n_meta = read_u64(is);
    for (std::uint64_t i = 0; i < n_meta; ++i) {
        std::string k = read_str(is);
        ck.meta[k] = read_str(is);
    }
    std::uint64_t n_arr = read_u64(is);
    for (std::uint64_t i = 0; i < n_arr; ++i) {
        std::string name = read_str(is);
        std::uint64_t rank = read_u64(is);
        Shape shape(rank);
        for (std::uint64_t d = 0; d < rank; ++d) shape[d] = read_u64(is);
        Array arr(shape);
        is.read(reinterpret_cast<char*>(arr.data.data()),
                static_cast<std::streamsize>(arr.numel() * sizeof(double)));
        ck.arrays[name] = std::move(arr);
    }
    if (!is) throw std::runtime_error("truncated checkpoint: " + path);
    return ck;
}

}  // namespace camrl::num
