#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "agzsl/tensor.hpp"

namespace agzsl::data {

// Directory bundle: manifest.json listing named arrays plus one raw
// little-endian row-major binary file per array. dtypes: f32le, f64le, i32le.
//
// This is the only on-disk container; feature bundles, pmi dumps, attention
// exports and checkpoints all use it.
class BundleWriter {
public:
    void add_f32(const std::string& name, const num::Tensor& t);
    void add_f64(const std::string& name, const num::Tensor& t);
    void add_i32(const std::string& name, const std::vector<std::int32_t>& v,
                 std::vector<std::size_t> shape = {});
    void set_meta(const std::string& key, const std::string& value);

    void write(const std::filesystem::path& dir) const;

private:
    struct Entry {
        std::string name;
        std::string dtype;
        std::vector<std::size_t> shape;
        std::vector<double> f64;
        std::vector<std::int32_t> i32;
    };
    std::vector<Entry> entries_;
    std::map<std::string, std::string> meta_;
};

class BundleReader {
public:
    explicit BundleReader(const std::filesystem::path& dir);

    bool has(const std::string& name) const;
    std::vector<std::string> names() const;
    const std::vector<std::size_t>& shape(const std::string& name) const;
    std::string dtype(const std::string& name) const;

    // f32le/f64le arrays widened to 64-bit.
    num::Tensor tensor(const std::string& name) const;
    std::vector<std::int32_t> ints(const std::string& name) const;

    std::string meta(const std::string& key, const std::string& fallback = "") const;
    bool has_meta(const std::string& key) const;

private:
    struct Entry {
        std::string dtype;
        std::vector<std::size_t> shape;
        std::string file;
        std::uint64_t byte_length = 0;
    };
    const Entry& entry(const std::string& name) const;

    std::filesystem::path dir_;
    std::map<std::string, Entry> entries_;
    std::map<std::string, std::string> meta_;
};

}  // namespace agzsl::data
