#include <filesystem>
#include <fstream>

#include "afford/checkpoint.hpp"
#include "afford/model.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
namespace ckpt = afford::ckpt;
namespace model = afford::model;

namespace {

model::ModelConfig tiny() {
    model::ModelConfig cfg;
    cfg.image_size = 16;
    cfg.patch_size = 8;
    cfg.encoder_dim = 16;
    cfg.encoder_layers = 1;
    cfg.projection_dim = 8;
    cfg.lm_dim = 32;
    cfg.lm_layers = 1;
    cfg.vocab_size = 32;
    cfg.map_size = 8;
    cfg.seed = 5;
    return cfg;
}

}  // namespace

TEST_CASE("checkpoint round-trips parameters exactly") {
    model::AffordanceModel<float> net(tiny());
    ckpt::Checkpoint ck;
    ck.config_json = "{\"note\":\"test\"}";
    ck.blobs = ckpt::store_to_blobs(net.params());

    const auto path = fs::temp_directory_path() / "afford_test.afck";
    ckpt::save_checkpoint(ck, path);
    const auto back = ckpt::load_checkpoint(path);
    CHECK(back.config_json == ck.config_json);
    REQUIRE(back.blobs.size() == ck.blobs.size());
    for (std::size_t i = 0; i < back.blobs.size(); ++i) {
        CHECK(back.blobs[i].name == ck.blobs[i].name);
        CHECK(back.blobs[i].data == ck.blobs[i].data);
    }

    model::AffordanceModel<float> other(tiny());
    other.params().at(0).value.v[0] = 99.0f;
    ckpt::blobs_to_store(back.blobs, other.params());
    CHECK(other.params().at(0).value.v[0] == net.params().at(0).value.v[0]);
    fs::remove(path);
}

TEST_CASE("loading fails closed on mismatches") {
    model::AffordanceModel<float> net(tiny());
    ckpt::Checkpoint ck;
    ck.config_json = "{}";
    ck.blobs = ckpt::store_to_blobs(net.params());
    const auto path = fs::temp_directory_path() / "afford_bad.afck";

    // wrong name
    auto renamed = ck;
    renamed.blobs[2].name = "enc.wrong";
    ckpt::save_checkpoint(renamed, path);
    auto loaded = ckpt::load_checkpoint(path);
    CHECK_THROWS_WITH_AS(ckpt::blobs_to_store(loaded.blobs, net.params()),
                         doctest::Contains("enc.wrong"), std::runtime_error);

    // missing blob
    auto chopped = ck;
    chopped.blobs.pop_back();
    ckpt::save_checkpoint(chopped, path);
    loaded = ckpt::load_checkpoint(path);
    CHECK_THROWS_AS(ckpt::blobs_to_store(loaded.blobs, net.params()), std::runtime_error);

    // corrupt magic
    {
        std::ofstream f(path, std::ios::binary);
        f << "JUNKJUNKJUNK";
    }
    CHECK_THROWS(ckpt::load_checkpoint(path));
    fs::remove(path);
}
