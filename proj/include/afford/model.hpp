#pragma once

// The miniature AffordanceLLM: shared image/depth encoder, token projection
// with neighbor grouping, a causal language model with a reserved mask
// token, and a query-conditioned mask decoder with hypernetwork head.

#include <optional>
#include <string>
#include <vector>

#include "afford/autograd.hpp"
#include "afford/dense_map.hpp"
#include "afford/image.hpp"
#include "afford/tokenizer.hpp"

namespace afford::model {

struct ModelConfig {
    int image_size = 96;
    int patch_size = 8;
    int encoder_dim = 64;
    int encoder_layers = 4;
    int projection_dim = 64;
    int group_factor = 4;
    int lm_dim = 256;  // must equal projection_dim * group_factor
    int lm_layers = 4;
    int vocab_size = 512;
    int map_size = 48;
    int max_text_len = 48;
    bool use_depth = true;
    unsigned long long seed = 1234;

    static constexpr int kHeads = 4;

    int patches_per_side() const { return image_size / patch_size; }
    int num_patches() const { return patches_per_side() * patches_per_side(); }
    int num_grouped() const { return num_patches() / group_factor; }

    // Grouping: a perfect-square factor with a divisible grid groups s x s
    // spatial neighborhoods; otherwise consecutive row-major strips.
    bool block_grouping() const;
    std::pair<int, int> grouped_grid() const;  // (rows, cols)

    void validate() const;
};

enum class Modality { Image, Depth, Text };

/// A token sequence on the tape plus its provenance; visual tokens carry
/// their spatial grid.
template <class T>
struct FeatureTokens {
    ag::Var tokens;
    Modality modality = Modality::Image;
    int grid_h = 0, grid_w = 0;
};

template <class T>
struct MaskQuery {
    ag::Var vector;
    int source_position = -1;  // index into the full LM sequence
};

template <class T>
struct LmOutput {
    ag::Var hidden;       // [seq, lm_dim]
    ag::Var text_logits;  // [n_text, vocab]
    int text_offset = 0;  // position of the first text token in the sequence
};

template <class T>
struct ForwardOutput {
    ag::Var text_logits;  // [n_text, vocab]
    ag::Var map;          // [map_size * map_size, 1], sigmoid outputs
    LmOutput<T> lm;
    MaskQuery<T> query;
};

struct GenerateResult {
    std::vector<int> tokens;  // emitted text ids (prompt excluded)
    DenseMap map;
    bool forced = false;  // mask token appended by constrained decoding
};

template <class T>
class AffordanceModel {
public:
    explicit AffordanceModel(const ModelConfig& cfg);

    const ModelConfig& config() const { return cfg_; }
    ag::ParamStore<T>& params() { return store_; }
    const ag::ParamStore<T>& params() const { return store_; }

    FeatureTokens<T> encode_image(ag::Tape<T>& tape, const ImageRGB& image) const;
    FeatureTokens<T> encode_depth(ag::Tape<T>& tape, const ImageGray& depth) const;
    FeatureTokens<T> project_and_group(ag::Tape<T>& tape, const FeatureTokens<T>& tokens) const;

    /// Causal transformer over [image, depth?, text]; logits at text positions.
    LmOutput<T> lm_forward(ag::Tape<T>& tape, const FeatureTokens<T>& f_img,
                           const std::optional<FeatureTokens<T>>& f_depth,
                           const std::vector<int>& text_ids) const;

    /// Requires exactly one mask token in text_ids (the teacher-forced target).
    MaskQuery<T> extract_mask_query(ag::Tape<T>& tape, const LmOutput<T>& lm,
                                    const std::vector<int>& text_ids) const;

    /// Decoder conditions on (grouped) image tokens only.
    ag::Var decode_affordance(ag::Tape<T>& tape, const FeatureTokens<T>& f_img,
                              const MaskQuery<T>& query) const;

    /// Full pass; text_ids must contain exactly one mask token.
    ForwardOutput<T> forward(ag::Tape<T>& tape, const ImageRGB& image,
                             const std::optional<ImageGray>& depth,
                             const std::vector<int>& text_ids) const;

    /// Greedy decoding; the mask token is force-appended when not emitted
    /// within max_new_tokens so a map is always produced.
    GenerateResult generate(const ImageRGB& image, const std::optional<ImageGray>& depth,
                            const std::vector<int>& prompt_ids, int max_new_tokens = 16) const;

    DenseMap map_from_var(const ag::Tape<T>& tape, ag::Var map) const;

private:
    struct AttnParams {
        int wq, bq, wk, bk, wv, bv, wo, bo;
    };
    struct BlockParams {
        int ln1_g, ln1_b;
        AttnParams attn;
        int ln2_g, ln2_b;
        int mlp_w1, mlp_b1, mlp_w2, mlp_b2;
    };
    struct DecBlockParams {
        AttnParams q2i;
        int lnq1_g, lnq1_b;
        int mlp_w1, mlp_b1, mlp_w2, mlp_b2;
        int lnq2_g, lnq2_b;
        AttnParams i2q;
        int lni_g, lni_b;
    };

    AttnParams add_attn(const std::string& prefix, int dim, ag::InitRng& rng);
    BlockParams add_block(const std::string& prefix, int dim, ag::InitRng& rng);

    ag::Var attention(ag::Tape<T>& tape, ag::Var x_q, ag::Var x_kv, const AttnParams& p,
                      bool causal) const;
    ag::Var mlp(ag::Tape<T>& tape, ag::Var x, int w1, int b1, int w2, int b2) const;
    ag::Var linear(ag::Tape<T>& tape, ag::Var x, int w, int b) const;
    ag::Var encoder_stack(ag::Tape<T>& tape, ag::Var x) const;
    ag::Var lm_hidden_at(ag::Tape<T>& tape, const LmOutput<T>& lm, int position) const;

    ModelConfig cfg_;
    ag::ParamStore<T> store_;

    // decoder channel plan
    int dec_dim_ = 0, up1_ch_ = 0, up2_ch_ = 0;
    int up1_kh_ = 0, up1_kw_ = 0, up2_kh_ = 0, up2_kw_ = 0;

    // parameter ids
    int patch_w_, patch_b_, enc_pos_;
    std::vector<BlockParams> enc_blocks_;
    int enc_lnf_g_, enc_lnf_b_;
    int proj_w_, proj_b_;
    int tok_embed_, lm_pos_, lm_seg_;
    std::vector<BlockParams> lm_blocks_;
    int lm_lnf_g_, lm_lnf_b_;
    int head_w_, head_b_;
    int mq_w1_, mq_b1_, mq_w2_, mq_b2_;
    std::vector<DecBlockParams> dec_blocks_;
    int dec_reduce_w_, dec_reduce_b_;
    int dec_up1_w_, dec_up1_b_, dec_ln_g_, dec_ln_b_;
    int dec_up2_w_, dec_up2_b_;
    int hyper_w1_, hyper_b1_, hyper_w2_, hyper_b2_;
    int out_bias_;
};

/// Element permutation taking [gh*gw, C*kh*kw] rows (channel-major within a
/// row: c, ky, kx) to [(gh*kh)*(gw*kw), C] pixels — the non-overlapping
/// transposed-conv layout shared by both upsampling stages.
std::vector<int> block_upsample_perm(int gh, int gw, int kh, int kw, int channels);

/// Factors an integer upscale into the two stage strides (second stage
/// takes the 2 when the factor is even).
std::pair<int, int> upsample_stages(int factor);

}  // namespace afford::model

#include "afford/model_inl.hpp"
