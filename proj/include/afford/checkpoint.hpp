#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "afford/autograd.hpp"

namespace afford::ckpt {

struct Blob {
    std::string name;
    int rows = 0, cols = 0;
    std::vector<float> data;  // little-endian f32 on disk
};

struct Checkpoint {
    std::string config_json;  // model config, tokenizer words, training counters
    std::vector<Blob> blobs;
};

// Single-file archive: magic "AFCK", version, config JSON, blob manifest
// (name/shape/offset), raw f32 payload. Loading validates the manifest and
// fails closed on any inconsistency, naming the first bad blob.
void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

template <class T>
std::vector<Blob> store_to_blobs(const ag::ParamStore<T>& store) {
    std::vector<Blob> blobs;
    for (int i = 0; i < store.count(); ++i) {
        const auto& p = store.at(i);
        Blob b;
        b.name = p.name;
        b.rows = p.value.rows;
        b.cols = p.value.cols;
        b.data.resize(p.value.size());
        for (std::size_t j = 0; j < b.data.size(); ++j)
            b.data[j] = static_cast<float>(p.value.v[j]);
        blobs.push_back(std::move(b));
    }
    return blobs;
}

/// The store must already hold the exact parameter set the config implies;
/// any missing/extra/mis-shaped blob is an error.
template <class T>
void blobs_to_store(const std::vector<Blob>& blobs, ag::ParamStore<T>& store) {
    if (static_cast<int>(blobs.size()) != store.count())
        throw std::runtime_error("checkpoint: parameter count mismatch (archive " +
                                 std::to_string(blobs.size()) + ", model " +
                                 std::to_string(store.count()) + ")");
    for (int i = 0; i < store.count(); ++i) {
        auto& p = store.at(i);
        const Blob& b = blobs[i];
        if (b.name != p.name)
            throw std::runtime_error("checkpoint: blob '" + b.name + "' where model expects '" +
                                     p.name + "'");
        if (b.rows != p.value.rows || b.cols != p.value.cols)
            throw std::runtime_error("checkpoint: blob '" + b.name + "' shape mismatch");
        for (std::size_t j = 0; j < b.data.size(); ++j)
            p.value.v[j] = static_cast<T>(b.data[j]);
    }
}

}  // namespace afford::ckpt
