#include "agzsl/bundle.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace agzsl::data {

namespace {

constexpr const char* kFormat = "agzsl-bundle";
constexpr int kVersion = 1;

std::vector<char> read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot open " + p.string());
    f.seekg(0, std::ios::end);
    std::streamoff n = f.tellg();
    f.seekg(0, std::ios::beg);
    std::vector<char> buf(static_cast<std::size_t>(n));
    f.read(buf.data(), n);
    if (!f) throw IoError("short read on " + p.string());
    return buf;
}

}  // namespace

void BundleWriter::add_f32(const std::string& name, const num::Tensor& t) {
    entries_.push_back({name, "f32le", t.shape(), t.vec(), {}});
}

void BundleWriter::add_f64(const std::string& name, const num::Tensor& t) {
    entries_.push_back({name, "f64le", t.shape(), t.vec(), {}});
}

void BundleWriter::add_i32(const std::string& name, const std::vector<std::int32_t>& v,
                           std::vector<std::size_t> shape) {
    if (shape.empty()) shape = {v.size()};
    if (num::shape_numel(shape) != v.size())
        throw DimensionError("bundle: i32 array " + name + " shape/size mismatch");
    entries_.push_back({name, "i32le", std::move(shape), {}, v});
}

void BundleWriter::set_meta(const std::string& key, const std::string& value) {
    meta_[key] = value;
}

void BundleWriter::write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["format"] = kFormat;
    manifest["version"] = kVersion;
    manifest["meta"] = meta_;
    auto arrays = nlohmann::json::array();
    for (const Entry& e : entries_) {
        std::string file = e.name + ".bin";
        std::vector<char> bytes;
        if (e.dtype == "f32le") {
            bytes.resize(e.f64.size() * 4);
            for (std::size_t i = 0; i < e.f64.size(); ++i) {
                float v = static_cast<float>(e.f64[i]);
                std::memcpy(bytes.data() + i * 4, &v, 4);
            }
        } else if (e.dtype == "f64le") {
            bytes.resize(e.f64.size() * 8);
            std::memcpy(bytes.data(), e.f64.data(), bytes.size());
        } else {
            bytes.resize(e.i32.size() * 4);
            std::memcpy(bytes.data(), e.i32.data(), bytes.size());
        }
        std::ofstream f(dir / file, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot write " + (dir / file).string());
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw IoError("write failed on " + (dir / file).string());
        arrays.push_back({{"name", e.name},
                          {"shape", e.shape},
                          {"dtype", e.dtype},
                          {"file", file},
                          {"byte_length", bytes.size()}});
    }
    manifest["arrays"] = arrays;
    std::ofstream f(dir / "manifest.json", std::ios::trunc);
    if (!f) throw IoError("cannot write manifest in " + dir.string());
    f << manifest.dump(2) << "\n";
}

BundleReader::BundleReader(const std::filesystem::path& dir) : dir_(dir) {
    std::filesystem::path mp = dir / "manifest.json";
    if (!std::filesystem::exists(mp)) throw IoError("missing manifest: " + mp.string());
    nlohmann::json manifest;
    try {
        std::ifstream f(mp);
        f >> manifest;
    } catch (const std::exception& e) {
        throw DataError("unparseable manifest " + mp.string() + ": " + e.what());
    }
    if (!manifest.contains("format") || manifest["format"] != kFormat)
        throw DataError("bad bundle format magic in " + mp.string());
    if (!manifest.contains("version") || manifest["version"].get<int>() != kVersion)
        throw DataError("unsupported bundle version in " + mp.string());
    if (manifest.contains("meta"))
        meta_ = manifest["meta"].get<std::map<std::string, std::string>>();
    for (const auto& a : manifest["arrays"]) {
        Entry e;
        e.dtype = a.at("dtype").get<std::string>();
        e.shape = a.at("shape").get<std::vector<std::size_t>>();
        e.file = a.at("file").get<std::string>();
        e.byte_length = a.at("byte_length").get<std::uint64_t>();
        if (e.dtype != "f32le" && e.dtype != "f64le" && e.dtype != "i32le")
            throw DataError("unsupported dtype " + e.dtype);
        std::size_t unit = e.dtype == "f64le" ? 8 : 4;
        if (num::shape_numel(e.shape) * unit != e.byte_length)
            throw DataError("array " + a.at("name").get<std::string>() +
                            ": manifest shape does not match byte_length");
        entries_[a.at("name").get<std::string>()] = std::move(e);
    }
}

bool BundleReader::has(const std::string& name) const { return entries_.count(name) > 0; }

std::vector<std::string> BundleReader::names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_) out.push_back(k);
    return out;
}

const BundleReader::Entry& BundleReader::entry(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw DataError("bundle has no array named " + name);
    return it->second;
}

const std::vector<std::size_t>& BundleReader::shape(const std::string& name) const {
    return entry(name).shape;
}

std::string BundleReader::dtype(const std::string& name) const { return entry(name).dtype; }

num::Tensor BundleReader::tensor(const std::string& name) const {
    const Entry& e = entry(name);
    if (e.dtype == "i32le") throw DataError("array " + name + " is integer, not float");
    std::vector<char> bytes = read_file(dir_ / e.file);
    if (bytes.size() != e.byte_length)
        throw DataError("array " + name + ": payload length " + std::to_string(bytes.size()) +
                        " does not match manifest byte_length " + std::to_string(e.byte_length));
    std::size_t n = num::shape_numel(e.shape);
    std::vector<double> vals(n);
    if (e.dtype == "f32le") {
        for (std::size_t i = 0; i < n; ++i) {
            float v;
            std::memcpy(&v, bytes.data() + i * 4, 4);
            vals[i] = static_cast<double>(v);
        }
    } else {
        std::memcpy(vals.data(), bytes.data(), n * 8);
    }
    num::Tensor t(e.shape, std::move(vals));
    if (!t.all_finite()) throw DataError("array " + name + " contains non-finite values");
    return t;
}

std::vector<std::int32_t> BundleReader::ints(const std::string& name) const {
    const Entry& e = entry(name);
    if (e.dtype != "i32le") throw DataError("array " + name + " is not i32le");
    std::vector<char> bytes = read_file(dir_ / e.file);
    if (bytes.size() != e.byte_length)
        throw DataError("array " + name + ": payload length does not match manifest");
    std::vector<std::int32_t> out(num::shape_numel(e.shape));
    std::memcpy(out.data(), bytes.data(), bytes.size());
    return out;
}

std::string BundleReader::meta(const std::string& key, const std::string& fallback) const {
    auto it = meta_.find(key);
    return it == meta_.end() ? fallback : it->second;
}

bool BundleReader::has_meta(const std::string& key) const { return meta_.count(key) > 0; }

}  // namespace agzsl::data
