#include "afford/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <memory>

#include "json.hpp"

namespace afford::ckpt {

namespace {

constexpr char kMagic[4] = {'A', 'F', 'C', 'K'};
constexpr uint32_t kVersion = 1;

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

void write_u64(FILE* f, uint64_t v) { std::fwrite(&v, 8, 1, f); }

uint64_t read_u64(FILE* f, const char* what) {
    uint64_t v = 0;
    if (std::fread(&v, 8, 1, f) != 1)
        throw std::runtime_error(std::string("checkpoint: truncated ") + what);
    return v;
}

void write_string(FILE* f, const std::string& s) {
    write_u64(f, s.size());
    std::fwrite(s.data(), 1, s.size(), f);
}

std::string read_string(FILE* f, const char* what) {
    const uint64_t len = read_u64(f, what);
    if (len > (1ull << 30)) throw std::runtime_error("checkpoint: absurd section length");
    std::string s(len, '\0');
    if (len && std::fread(s.data(), 1, len, f) != len)
        throw std::runtime_error(std::string("checkpoint: truncated ") + what);
    return s;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
    FilePtr f(std::fopen(path.string().c_str(), "wb"));
    if (!f) throw std::runtime_error("checkpoint: cannot write " + path.string());

    std::fwrite(kMagic, 1, 4, f.get());
    const uint32_t ver = kVersion;
    std::fwrite(&ver, 4, 1, f.get());
    write_string(f.get(), ck.config_json);

    nlohmann::json manifest = nlohmann::json::array();
    uint64_t offset = 0;
    for (const auto& b : ck.blobs) {
        manifest.push_back({{"name", b.name},
                            {"rows", b.rows},
                            {"cols", b.cols},
                            {"offset", offset},
                            {"count", b.data.size()}});
        offset += b.data.size();
    }
    write_string(f.get(), manifest.dump());
    write_u64(f.get(), offset);
    for (const auto& b : ck.blobs)
        if (!b.data.empty() && std::fwrite(b.data.data(), 4, b.data.size(), f.get()) != b.data.size())
            throw std::runtime_error("checkpoint: short write for blob " + b.name);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    FilePtr f(std::fopen(path.string().c_str(), "rb"));
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path.string());

    char magic[4];
    if (std::fread(magic, 1, 4, f.get()) != 4 || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path.string());
    uint32_t ver = 0;
    if (std::fread(&ver, 4, 1, f.get()) != 1 || ver != kVersion)
        throw std::runtime_error("checkpoint: unsupported version");

    Checkpoint ck;
    ck.config_json = read_string(f.get(), "config");
    const std::string manifest_text = read_string(f.get(), "manifest");
    const uint64_t total = read_u64(f.get(), "payload size");

    std::vector<float> payload(total);
    if (total && std::fread(payload.data(), 4, total, f.get()) != total)
        throw std::runtime_error("checkpoint: truncated payload");

    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(manifest_text);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("checkpoint: bad manifest JSON: ") + e.what());
    }
    for (const auto& entry : manifest) {
        Blob b;
        b.name = entry.at("name").get<std::string>();
        b.rows = entry.at("rows").get<int>();
        b.cols = entry.at("cols").get<int>();
        const uint64_t offset = entry.at("offset").get<uint64_t>();
        const uint64_t count = entry.at("count").get<uint64_t>();
        if (count != static_cast<uint64_t>(b.rows) * b.cols)
            throw std::runtime_error("checkpoint: blob '" + b.name + "' count/shape mismatch");
        if (offset + count > total)
            throw std::runtime_error("checkpoint: blob '" + b.name + "' exceeds payload");
        b.data.assign(payload.begin() + offset, payload.begin() + offset + count);
        ck.blobs.push_back(std::move(b));
    }
    return ck;
}

}  // namespace afford::ckpt
