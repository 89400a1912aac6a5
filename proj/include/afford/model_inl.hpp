#pragma once

#include <algorithm>
#include <cmath>

namespace afford::model {

inline bool ModelConfig::block_grouping() const {
    const int s = static_cast<int>(std::lround(std::sqrt(static_cast<double>(group_factor))));
    return s * s == group_factor && patches_per_side() % s == 0;
}

inline std::pair<int, int> ModelConfig::grouped_grid() const {
    const int grid = patches_per_side();
    if (block_grouping()) {
        const int s = static_cast<int>(std::lround(std::sqrt(static_cast<double>(group_factor))));
        return {grid / s, grid / s};
    }
    return {grid, grid / group_factor};
}

inline void ModelConfig::validate() const {
    if (image_size < patch_size || image_size % patch_size != 0)
        throw std::invalid_argument("ModelConfig: image_size must be a multiple of patch_size");
    if (lm_dim != projection_dim * group_factor)
        throw std::invalid_argument("ModelConfig: lm_dim must equal projection_dim * group_factor");
    if (num_patches() % group_factor != 0)
        throw std::invalid_argument("ModelConfig: token count not divisible by group_factor");
    if (!block_grouping() && patches_per_side() % group_factor != 0)
        throw std::invalid_argument(
            "ModelConfig: group_factor must be a perfect square dividing the grid or divide "
            "the patch columns");
    if (encoder_dim % kHeads != 0 || lm_dim % kHeads != 0)
        throw std::invalid_argument("ModelConfig: dims must divide by the head count (4)");
    if (encoder_layers < 1 || lm_layers < 1)
        throw std::invalid_argument("ModelConfig: need at least one layer per stack");
    if (vocab_size < data::kNumReserved + 1)
        throw std::invalid_argument("ModelConfig: vocab too small for reserved tokens");
    if (max_text_len < 4) throw std::invalid_argument("ModelConfig: max_text_len too small");
    const auto [gh, gw] = grouped_grid();
    if (map_size % gh != 0 || map_size % gw != 0)
        throw std::invalid_argument("ModelConfig: map_size must be a multiple of the grouped grid");
}

inline std::pair<int, int> upsample_stages(int factor) {
    if (factor < 1) throw std::invalid_argument("upsample_stages: factor < 1");
    if (factor == 1) return {1, 1};
    const int k2 = factor % 2 == 0 ? 2 : 1;
    return {factor / k2, k2};
}

inline std::vector<int> block_upsample_perm(int gh, int gw, int kh, int kw, int channels) {
    std::vector<int> perm(static_cast<std::size_t>(gh) * gw * kh * kw * channels);
    std::size_t at = 0;
    for (int py = 0; py < gh * kh; ++py) {
        const int gy = py / kh, ky = py % kh;
        for (int px = 0; px < gw * kw; ++px) {
            const int gx = px / kw, kx = px % kw;
            const int token = gy * gw + gx;
            for (int c = 0; c < channels; ++c)
                perm[at++] = (token * channels + c) * kh * kw + ky * kw + kx;
        }
    }
    return perm;
}

template <class T>
typename AffordanceModel<T>::AttnParams AffordanceModel<T>::add_attn(const std::string& prefix,
                                                                     int dim, ag::InitRng& rng) {
    AttnParams p;
    p.wq = store_.add(prefix + ".wq", dim, dim, ag::Init::Normal02, rng);
    p.bq = store_.add(prefix + ".bq", 1, dim, ag::Init::Zero, rng);
    p.wk = store_.add(prefix + ".wk", dim, dim, ag::Init::Normal02, rng);
    p.bk = store_.add(prefix + ".bk", 1, dim, ag::Init::Zero, rng);
    p.wv = store_.add(prefix + ".wv", dim, dim, ag::Init::Normal02, rng);
    p.bv = store_.add(prefix + ".bv", 1, dim, ag::Init::Zero, rng);
    p.wo = store_.add(prefix + ".wo", dim, dim, ag::Init::Normal02, rng);
    p.bo = store_.add(prefix + ".bo", 1, dim, ag::Init::Zero, rng);
    return p;
}

template <class T>
typename AffordanceModel<T>::BlockParams AffordanceModel<T>::add_block(const std::string& prefix,
                                                                       int dim, ag::InitRng& rng) {
    BlockParams b;
    b.ln1_g = store_.add(prefix + ".ln1.g", 1, dim, ag::Init::One, rng);
    b.ln1_b = store_.add(prefix + ".ln1.b", 1, dim, ag::Init::Zero, rng);
    b.attn = add_attn(prefix + ".attn", dim, rng);
    b.ln2_g = store_.add(prefix + ".ln2.g", 1, dim, ag::Init::One, rng);
    b.ln2_b = store_.add(prefix + ".ln2.b", 1, dim, ag::Init::Zero, rng);
    const int hidden = 2 * dim;
    b.mlp_w1 = store_.add(prefix + ".mlp.w1", dim, hidden, ag::Init::Normal02, rng);
    b.mlp_b1 = store_.add(prefix + ".mlp.b1", 1, hidden, ag::Init::Zero, rng);
    b.mlp_w2 = store_.add(prefix + ".mlp.w2", hidden, dim, ag::Init::Normal02, rng);
    b.mlp_b2 = store_.add(prefix + ".mlp.b2", 1, dim, ag::Init::Zero, rng);
    return b;
}

template <class T>
AffordanceModel<T>::AffordanceModel(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    ag::InitRng rng(cfg_.seed);

    patch_w_ = store_.add("enc.patch.w", cfg_.patch_size * cfg_.patch_size * 3, cfg_.encoder_dim,
                          ag::Init::Normal02, rng);
    patch_b_ = store_.add("enc.patch.b", 1, cfg_.encoder_dim, ag::Init::Zero, rng);
    enc_pos_ = store_.add("enc.pos", cfg_.num_patches(), cfg_.encoder_dim, ag::Init::Normal02, rng);
    for (int i = 0; i < cfg_.encoder_layers; ++i)
        enc_blocks_.push_back(add_block("enc.l" + std::to_string(i), cfg_.encoder_dim, rng));
    enc_lnf_g_ = store_.add("enc.lnf.g", 1, cfg_.encoder_dim, ag::Init::One, rng);
    enc_lnf_b_ = store_.add("enc.lnf.b", 1, cfg_.encoder_dim, ag::Init::Zero, rng);

    proj_w_ = store_.add("proj.w", cfg_.encoder_dim, cfg_.projection_dim, ag::Init::Normal02, rng);
    proj_b_ = store_.add("proj.b", 1, cfg_.projection_dim, ag::Init::Zero, rng);

    tok_embed_ = store_.add("lm.tok_embed", cfg_.vocab_size, cfg_.lm_dim, ag::Init::Normal02, rng);
    lm_pos_ = store_.add("lm.pos", cfg_.num_grouped() + cfg_.max_text_len, cfg_.lm_dim,
                         ag::Init::Normal02, rng);
    lm_seg_ = store_.add("lm.seg", 3, cfg_.lm_dim, ag::Init::Normal02, rng);
    for (int i = 0; i < cfg_.lm_layers; ++i)
        lm_blocks_.push_back(add_block("lm.l" + std::to_string(i), cfg_.lm_dim, rng));
    lm_lnf_g_ = store_.add("lm.lnf.g", 1, cfg_.lm_dim, ag::Init::One, rng);
    lm_lnf_b_ = store_.add("lm.lnf.b", 1, cfg_.lm_dim, ag::Init::Zero, rng);
    head_w_ = store_.add("lm.head.w", cfg_.lm_dim, cfg_.vocab_size, ag::Init::Normal02, rng);
    head_b_ = store_.add("lm.head.b", 1, cfg_.vocab_size, ag::Init::Zero, rng);

    mq_w1_ = store_.add("mq.w1", cfg_.lm_dim, cfg_.lm_dim, ag::Init::Normal02, rng);
    mq_b1_ = store_.add("mq.b1", 1, cfg_.lm_dim, ag::Init::Zero, rng);
    mq_w2_ = store_.add("mq.w2", cfg_.lm_dim, cfg_.lm_dim, ag::Init::Normal02, rng);
    mq_b2_ = store_.add("mq.b2", 1, cfg_.lm_dim, ag::Init::Zero, rng);

    for (int i = 0; i < 2; ++i) {
        DecBlockParams d;
        const std::string p = "dec.b" + std::to_string(i);
        d.q2i = add_attn(p + ".q2i", cfg_.lm_dim, rng);
        d.lnq1_g = store_.add(p + ".lnq1.g", 1, cfg_.lm_dim, ag::Init::One, rng);
        d.lnq1_b = store_.add(p + ".lnq1.b", 1, cfg_.lm_dim, ag::Init::Zero, rng);
        d.mlp_w1 = store_.add(p + ".mlp.w1", cfg_.lm_dim, 2 * cfg_.lm_dim, ag::Init::Normal02, rng);
        d.mlp_b1 = store_.add(p + ".mlp.b1", 1, 2 * cfg_.lm_dim, ag::Init::Zero, rng);
        d.mlp_w2 = store_.add(p + ".mlp.w2", 2 * cfg_.lm_dim, cfg_.lm_dim, ag::Init::Normal02, rng);
        d.mlp_b2 = store_.add(p + ".mlp.b2", 1, cfg_.lm_dim, ag::Init::Zero, rng);
        d.lnq2_g = store_.add(p + ".lnq2.g", 1, cfg_.lm_dim, ag::Init::One, rng);
        d.lnq2_b = store_.add(p + ".lnq2.b", 1, cfg_.lm_dim, ag::Init::Zero, rng);
        d.i2q = add_attn(p + ".i2q", cfg_.lm_dim, rng);
        d.lni_g = store_.add(p + ".lni.g", 1, cfg_.lm_dim, ag::Init::One, rng);
        d.lni_b = store_.add(p + ".lni.b", 1, cfg_.lm_dim, ag::Init::Zero, rng);
        dec_blocks_.push_back(d);
    }

    dec_dim_ = std::max(8, cfg_.lm_dim / 4);
    up1_ch_ = std::max(8, dec_dim_ / 2);
    up2_ch_ = std::max(4, up1_ch_ / 2);
    const auto [gh, gw] = cfg_.grouped_grid();
    std::tie(up1_kh_, up2_kh_) = upsample_stages(cfg_.map_size / gh);
    std::tie(up1_kw_, up2_kw_) = upsample_stages(cfg_.map_size / gw);

    dec_reduce_w_ = store_.add("dec.reduce.w", cfg_.lm_dim, dec_dim_, ag::Init::Normal02, rng);
    dec_reduce_b_ = store_.add("dec.reduce.b", 1, dec_dim_, ag::Init::Zero, rng);
    dec_up1_w_ = store_.add("dec.up1.w", dec_dim_, up1_ch_ * up1_kh_ * up1_kw_,
                            ag::Init::Normal02, rng);
    dec_up1_b_ = store_.add("dec.up1.b", 1, up1_ch_ * up1_kh_ * up1_kw_, ag::Init::Zero, rng);
    dec_ln_g_ = store_.add("dec.ln.g", 1, up1_ch_, ag::Init::One, rng);
    dec_ln_b_ = store_.add("dec.ln.b", 1, up1_ch_, ag::Init::Zero, rng);
    dec_up2_w_ = store_.add("dec.up2.w", up1_ch_, up2_ch_ * up2_kh_ * up2_kw_,
                            ag::Init::Normal02, rng);
    dec_up2_b_ = store_.add("dec.up2.b", 1, up2_ch_ * up2_kh_ * up2_kw_, ag::Init::Zero, rng);

    hyper_w1_ = store_.add("dec.hyper.w1", cfg_.lm_dim, cfg_.lm_dim, ag::Init::Normal02, rng);
    hyper_b1_ = store_.add("dec.hyper.b1", 1, cfg_.lm_dim, ag::Init::Zero, rng);
    hyper_w2_ = store_.add("dec.hyper.w2", cfg_.lm_dim, up2_ch_, ag::Init::Normal02, rng);
    hyper_b2_ = store_.add("dec.hyper.b2", 1, up2_ch_, ag::Init::Zero, rng);
    out_bias_ = store_.add("dec.out_bias", 1, 1, ag::Init::Zero, rng);
}

template <class T>
ag::Var AffordanceModel<T>::linear(ag::Tape<T>& tape, ag::Var x, int w, int b) const {
    return tape.add_row(tape.matmul(x, tape.param(w)), tape.param(b));
}

template <class T>
ag::Var AffordanceModel<T>::attention(ag::Tape<T>& tape, ag::Var x_q, ag::Var x_kv,
                                      const AttnParams& p, bool causal) const {
    const int dim = x_q.cols;
    const int dh = dim / ModelConfig::kHeads;
    ag::Var q = linear(tape, x_q, p.wq, p.bq);
    ag::Var k = linear(tape, x_kv, p.wk, p.bk);
    ag::Var v = linear(tape, x_kv, p.wv, p.bv);

    std::vector<ag::Var> ctx;
    for (int h = 0; h < ModelConfig::kHeads; ++h) {
        ag::Var qh = tape.slice_cols(q, h * dh, (h + 1) * dh);
        ag::Var kh = tape.slice_cols(k, h * dh, (h + 1) * dh);
        ag::Var vh = tape.slice_cols(v, h * dh, (h + 1) * dh);
        ag::Var scores = tape.scale(tape.matmul_nt(qh, kh), 1.0 / std::sqrt(double(dh)));
        ag::Var probs = tape.softmax_rows(scores, causal, 0);
        ctx.push_back(tape.matmul(probs, vh));
    }
    return linear(tape, tape.concat_cols(ctx), p.wo, p.bo);
}

template <class T>
ag::Var AffordanceModel<T>::mlp(ag::Tape<T>& tape, ag::Var x, int w1, int b1, int w2,
                                int b2) const {
    return linear(tape, tape.gelu(linear(tape, x, w1, b1)), w2, b2);
}

template <class T>
ag::Var AffordanceModel<T>::encoder_stack(ag::Tape<T>& tape, ag::Var x) const {
    for (const auto& blk : enc_blocks_) {
        ag::Var normed = tape.layernorm(x, tape.param(blk.ln1_g), tape.param(blk.ln1_b));
        x = tape.add(x, attention(tape, normed, normed, blk.attn, /*causal=*/false));
        ag::Var normed2 = tape.layernorm(x, tape.param(blk.ln2_g), tape.param(blk.ln2_b));
        x = tape.add(x, mlp(tape, normed2, blk.mlp_w1, blk.mlp_b1, blk.mlp_w2, blk.mlp_b2));
    }
    return tape.layernorm(x, tape.param(enc_lnf_g_), tape.param(enc_lnf_b_));
}

template <class T>
FeatureTokens<T> AffordanceModel<T>::encode_image(ag::Tape<T>& tape, const ImageRGB& image) const {
    if (image.height != cfg_.image_size || image.width != cfg_.image_size)
        throw std::invalid_argument("encode_image: input must be " +
                                    std::to_string(cfg_.image_size) + "x" +
                                    std::to_string(cfg_.image_size) +
                                    " (the model never resizes silently)");
    const int p = cfg_.patch_size;
    const int side = cfg_.patches_per_side();
    ag::Tensor2<T> patches(cfg_.num_patches(), p * p * 3);
    for (int gy = 0; gy < side; ++gy)
        for (int gx = 0; gx < side; ++gx) {
            T* row = patches.row(gy * side + gx);
            int at = 0;
            for (int y = 0; y < p; ++y)
                for (int x = 0; x < p; ++x)
                    for (int c = 0; c < 3; ++c)
                        row[at++] = static_cast<T>(image.at(gy * p + y, gx * p + x, c));
        }

    ag::Var x = tape.add(linear(tape, tape.input(std::move(patches)), patch_w_, patch_b_),
                         tape.param(enc_pos_));
    FeatureTokens<T> out;
    out.tokens = encoder_stack(tape, x);
    out.modality = Modality::Image;
    out.grid_h = side;
    out.grid_w = side;
    return out;
}

template <class T>
FeatureTokens<T> AffordanceModel<T>::encode_depth(ag::Tape<T>& tape, const ImageGray& depth) const {
    if (!cfg_.use_depth)
        throw std::invalid_argument("encode_depth: depth path disabled in this config");
    FeatureTokens<T> out = encode_image(tape, replicate3(depth));  // identical encoder weights
    out.modality = Modality::Depth;
    return out;
}

template <class T>
FeatureTokens<T> AffordanceModel<T>::project_and_group(ag::Tape<T>& tape,
                                                       const FeatureTokens<T>& tokens) const {
    if (tokens.tokens.rows % cfg_.group_factor != 0)
        throw std::invalid_argument("project_and_group: token count not divisible by group factor");
    ag::Var projected = linear(tape, tokens.tokens, proj_w_, proj_b_);

    ag::Var ordered = projected;
    const auto [gh, gw] = cfg_.grouped_grid();
    if (cfg_.block_grouping()) {
        // reorder so each s x s spatial neighborhood is consecutive
        const int s = tokens.grid_h / gh;
        std::vector<int> perm;
        perm.reserve(tokens.tokens.rows);
        for (int by = 0; by < gh; ++by)
            for (int bx = 0; bx < gw; ++bx)
                for (int ky = 0; ky < s; ++ky)
                    for (int kx = 0; kx < s; ++kx)
                        perm.push_back((by * s + ky) * tokens.grid_w + bx * s + kx);
        ordered = tape.gather_rows(projected, std::move(perm));
    }

    FeatureTokens<T> out;
    out.tokens = tape.reshape(ordered, tokens.tokens.rows / cfg_.group_factor,
                              cfg_.projection_dim * cfg_.group_factor);
    out.modality = tokens.modality;
    out.grid_h = gh;
    out.grid_w = gw;
    return out;
}

template <class T>
LmOutput<T> AffordanceModel<T>::lm_forward(ag::Tape<T>& tape, const FeatureTokens<T>& f_img,
                                           const std::optional<FeatureTokens<T>>& f_depth,
                                           const std::vector<int>& text_ids) const {
    if (f_img.tokens.cols != cfg_.lm_dim)
        throw std::invalid_argument("lm_forward: image token width != lm_dim (group first)");
    if (f_depth && f_depth->tokens.cols != cfg_.lm_dim)
        throw std::invalid_argument("lm_forward: depth token width != lm_dim");
    if (text_ids.empty()) throw std::invalid_argument("lm_forward: empty text");
    if (static_cast<int>(text_ids.size()) > cfg_.max_text_len)
        throw std::invalid_argument("lm_forward: text longer than max_text_len");

    const int n_vis = f_img.tokens.rows;
    ag::Var pos_vis = tape.slice_rows(tape.param(lm_pos_), 0, n_vis);
    ag::Var seg = tape.param(lm_seg_);

    std::vector<ag::Var> parts;
    parts.push_back(tape.add_row(tape.add(f_img.tokens, pos_vis), tape.slice_rows(seg, 0, 1)));
    if (f_depth) {
        // depth reuses the image positional entries, distinct segment row
        ag::Var pos_depth = tape.slice_rows(tape.param(lm_pos_), 0, f_depth->tokens.rows);
        parts.push_back(
            tape.add_row(tape.add(f_depth->tokens, pos_depth), tape.slice_rows(seg, 1, 2)));
    }
    const int n_text = static_cast<int>(text_ids.size());
    ag::Var text = tape.embedding(text_ids, tape.param(tok_embed_));
    ag::Var pos_text = tape.slice_rows(tape.param(lm_pos_), n_vis, n_vis + n_text);
    parts.push_back(tape.add_row(tape.add(text, pos_text), tape.slice_rows(seg, 2, 3)));

    ag::Var x = tape.concat_rows(parts);
    for (const auto& blk : lm_blocks_) {
        ag::Var normed = tape.layernorm(x, tape.param(blk.ln1_g), tape.param(blk.ln1_b));
        x = tape.add(x, attention(tape, normed, normed, blk.attn, /*causal=*/true));
        ag::Var normed2 = tape.layernorm(x, tape.param(blk.ln2_g), tape.param(blk.ln2_b));
        x = tape.add(x, mlp(tape, normed2, blk.mlp_w1, blk.mlp_b1, blk.mlp_w2, blk.mlp_b2));
    }
    x = tape.layernorm(x, tape.param(lm_lnf_g_), tape.param(lm_lnf_b_));

    LmOutput<T> out;
    out.hidden = x;
    out.text_offset = x.rows - n_text;
    out.text_logits = linear(tape, tape.slice_rows(x, out.text_offset, x.rows), head_w_, head_b_);
    return out;
}

template <class T>
MaskQuery<T> AffordanceModel<T>::extract_mask_query(ag::Tape<T>& tape, const LmOutput<T>& lm,
                                                    const std::vector<int>& text_ids) const {
    int found = -1;
    for (std::size_t i = 0; i < text_ids.size(); ++i) {
        if (text_ids[i] == data::kMask) {
            if (found >= 0)
                throw std::invalid_argument("extract_mask_query: multiple mask tokens in targets");
            found = static_cast<int>(i);
        }
    }
    if (found < 0) throw std::invalid_argument("extract_mask_query: no mask token in targets");

    MaskQuery<T> q;
    q.source_position = lm.text_offset + found;
    ag::Var h = tape.slice_rows(lm.hidden, q.source_position, q.source_position + 1);
    q.vector = linear(tape, tape.gelu(linear(tape, h, mq_w1_, mq_b1_)), mq_w2_, mq_b2_);
    return q;
}

template <class T>
ag::Var AffordanceModel<T>::decode_affordance(ag::Tape<T>& tape, const FeatureTokens<T>& f_img,
                                              const MaskQuery<T>& query) const {
    if (f_img.modality != Modality::Image)
        throw std::invalid_argument("decode_affordance: decoder conditions on image tokens only");
    if (f_img.grid_h <= 0 || f_img.grid_w <= 0)
        throw std::invalid_argument("decode_affordance: image tokens need a spatial grid");

    ag::Var img = f_img.tokens;
    ag::Var q = query.vector;
    for (const auto& blk : dec_blocks_) {
        q = tape.layernorm(tape.add(q, attention(tape, q, img, blk.q2i, false)),
                           tape.param(blk.lnq1_g), tape.param(blk.lnq1_b));
        q = tape.layernorm(
            tape.add(q, mlp(tape, q, blk.mlp_w1, blk.mlp_b1, blk.mlp_w2, blk.mlp_b2)),
            tape.param(blk.lnq2_g), tape.param(blk.lnq2_b));
        img = tape.layernorm(tape.add(img, attention(tape, img, q, blk.i2q, false)),
                             tape.param(blk.lni_g), tape.param(blk.lni_b));
    }

    // two non-overlapping transposed-conv stages to map_size x map_size
    ag::Var x = tape.gelu(linear(tape, img, dec_reduce_w_, dec_reduce_b_));
    x = linear(tape, x, dec_up1_w_, dec_up1_b_);
    {
        const auto perm = block_upsample_perm(f_img.grid_h, f_img.grid_w, up1_kh_, up1_kw_, up1_ch_);
        x = tape.reshape(x, static_cast<int>(x.rows) * x.cols, 1);
        x = tape.gather_rows(x, perm);
        x = tape.reshape(x, f_img.grid_h * up1_kh_ * f_img.grid_w * up1_kw_, up1_ch_);
    }
    x = tape.gelu(tape.layernorm(x, tape.param(dec_ln_g_), tape.param(dec_ln_b_)));
    const int mid_h = f_img.grid_h * up1_kh_, mid_w = f_img.grid_w * up1_kw_;
    x = linear(tape, x, dec_up2_w_, dec_up2_b_);
    {
        const auto perm = block_upsample_perm(mid_h, mid_w, up2_kh_, up2_kw_, up2_ch_);
        x = tape.reshape(x, static_cast<int>(x.rows) * x.cols, 1);
        x = tape.gather_rows(x, perm);
        x = tape.reshape(x, mid_h * up2_kh_ * mid_w * up2_kw_, up2_ch_);
    }
    x = tape.gelu(x);

    // hypernetwork head: per-pixel dot with a query-derived channel vector
    ag::Var w = linear(tape, tape.gelu(linear(tape, q, hyper_w1_, hyper_b1_)), hyper_w2_, hyper_b2_);
    ag::Var logits = tape.add_row(tape.matmul_nt(x, w), tape.param(out_bias_));
    return tape.sigmoid(logits);  // [map_size * map_size, 1]
}

template <class T>
ForwardOutput<T> AffordanceModel<T>::forward(ag::Tape<T>& tape, const ImageRGB& image,
                                             const std::optional<ImageGray>& depth,
                                             const std::vector<int>& text_ids) const {
    if (cfg_.use_depth && !depth)
        throw std::invalid_argument("forward: config expects a depth map");
    FeatureTokens<T> img = project_and_group(tape, encode_image(tape, image));
    std::optional<FeatureTokens<T>> dep;
    if (cfg_.use_depth && depth)
        dep = project_and_group(tape, encode_depth(tape, *depth));

    ForwardOutput<T> out;
    out.lm = lm_forward(tape, img, dep, text_ids);
    out.text_logits = out.lm.text_logits;
    out.query = extract_mask_query(tape, out.lm, text_ids);
    out.map = decode_affordance(tape, img, out.query);
    return out;
}

template <class T>
ag::Var AffordanceModel<T>::lm_hidden_at(ag::Tape<T>& tape, const LmOutput<T>& lm,
                                         int position) const {
    return tape.slice_rows(lm.hidden, position, position + 1);
}

template <class T>
DenseMap AffordanceModel<T>::map_from_var(const ag::Tape<T>& tape, ag::Var map) const {
    const auto& t = tape.value(map);
    DenseMap out(cfg_.map_size, cfg_.map_size);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(t.v[i]);
    return out;
}

template <class T>
GenerateResult AffordanceModel<T>::generate(const ImageRGB& image,
                                            const std::optional<ImageGray>& depth,
                                            const std::vector<int>& prompt_ids,
                                            int max_new_tokens) const {
    if (max_new_tokens < 1) throw std::invalid_argument("generate: max_new_tokens < 1");

    std::vector<int> text = {data::kBos};
    text.insert(text.end(), prompt_ids.begin(), prompt_ids.end());
    const int budget =
        std::min(max_new_tokens, cfg_.max_text_len - static_cast<int>(text.size()) - 1);

    std::vector<int> emitted;
    int mask_index = -1;  // index into `text`
    for (int step = 0; step < budget; ++step) {
        ag::Tape<T> tape(const_cast<ag::ParamStore<T>*>(&store_));
        FeatureTokens<T> img = project_and_group(tape, encode_image(tape, image));
        std::optional<FeatureTokens<T>> dep;
        if (cfg_.use_depth && depth) dep = project_and_group(tape, encode_depth(tape, *depth));
        LmOutput<T> lm = lm_forward(tape, img, dep, text);

        const auto& logits = tape.value(lm.text_logits);
        const T* last = logits.row(logits.rows - 1);
        int best = 0;
        for (int vcb = 1; vcb < logits.cols; ++vcb)
            if (last[vcb] > last[best]) best = vcb;
        text.push_back(best);
        emitted.push_back(best);
        if (best == data::kMask && mask_index < 0) mask_index = static_cast<int>(text.size()) - 1;
        if (best == data::kEos) break;
    }

    GenerateResult result;
    if (mask_index < 0) {
        text.push_back(data::kMask);  // constrained decoding fallback
        emitted.push_back(data::kMask);
        mask_index = static_cast<int>(text.size()) - 1;
        result.forced = true;
    }

    ag::Tape<T> tape(const_cast<ag::ParamStore<T>*>(&store_));
    FeatureTokens<T> img = project_and_group(tape, encode_image(tape, image));
    std::optional<FeatureTokens<T>> dep;
    if (cfg_.use_depth && depth) dep = project_and_group(tape, encode_depth(tape, *depth));
    LmOutput<T> lm = lm_forward(tape, img, dep, text);
    MaskQuery<T> q;
    q.source_position = lm.text_offset + mask_index;
    ag::Var h = tape.slice_rows(lm.hidden, q.source_position, q.source_position + 1);
    q.vector = linear(tape, tape.gelu(linear(tape, h, mq_w1_, mq_b1_)), mq_w2_, mq_b2_);
    ag::Var map = decode_affordance(tape, img, q);

    result.tokens = std::move(emitted);
    result.map = map_from_var(tape, map);
    return result;
}

}  // namespace afford::model
