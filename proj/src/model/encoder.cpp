#include "tabppo/encoder.hpp"

#include <cmath>
#include <stdexcept>

#include "tabppo/ops.hpp"

namespace tabppo::model {

using num::Var;

std::string to_string(EncoderKind kind) { return kind == EncoderKind::transformer ? "transformer" : "mlp"; }

EncoderKind encoder_kind_from_string(const std::string& name) {
    if (name == "transformer") return EncoderKind::transformer;
    if (name == "mlp") return EncoderKind::mlp;
    throw std::invalid_argument("unknown encoder kind '" + name + "' (expected transformer or mlp)");
}

void EncoderConfig::validate() const {
    if (embed_dim == 0) throw std::invalid_argument("embed_dim must be positive");
    if (ffn_hidden == 0) throw std::invalid_argument("ffn_hidden must be positive");
    if (kind == EncoderKind::transformer) {
        if (n_layers < 1) throw std::invalid_argument("n_layers must be >= 1");
        if (n_heads < 1 || embed_dim % n_heads != 0) {
            throw std::invalid_argument("embed_dim (" + std::to_string(embed_dim) + ") must be divisible by n_heads (" +
                                        std::to_string(n_heads) + ")");
        }
    }
}

void to_json(nlohmann::json& j, const EncoderConfig& c) {
    j = {{"embed_dim", c.embed_dim},
         {"n_layers", c.n_layers},
         {"n_heads", c.n_heads},
         {"ffn_hidden", c.ffn_hidden},
         {"encoder_kind", to_string(c.kind)}};
}

void from_json(const nlohmann::json& j, EncoderConfig& c) {
    EncoderConfig d;
    c.embed_dim = j.value("embed_dim", d.embed_dim);
    c.n_layers = j.value("n_layers", d.n_layers);
    c.n_heads = j.value("n_heads", d.n_heads);
    c.ffn_hidden = j.value("ffn_hidden", 4 * c.embed_dim);
    c.kind = encoder_kind_from_string(j.value("encoder_kind", to_string(d.kind)));
}

InputLayout InputLayout::from_schema(const data::FeatureSchema& schema) {
    InputLayout l;
    for (const auto& f : schema.categorical) l.vocab_sizes.push_back(f.vocab_size());
    l.n_numerical = schema.n_numerical();
    l.n_classes = schema.n_classes();
    return l;
}

void to_json(nlohmann::json& j, const InputLayout& l) {
    j = {{"vocab_sizes", l.vocab_sizes}, {"n_numerical", l.n_numerical}, {"n_classes", l.n_classes}};
}

void from_json(const nlohmann::json& j, InputLayout& l) {
    l.vocab_sizes = j.at("vocab_sizes").get<std::vector<std::size_t>>();
    l.n_numerical = j.at("n_numerical").get<std::size_t>();
    l.n_classes = j.at("n_classes").get<std::size_t>();
}

Encoder::Linear Encoder::add_linear(const std::string& name, std::size_t in, std::size_t out, std::mt19937_64& rng) {
    Linear l;
    num::Tensor w({in, out});
    num::init_uniform_fan_in(w, in, rng);
    num::Tensor b({out});
    num::init_uniform_fan_in(b, in, rng);
    l.weight = params_.size();
    params_.push_back({name + ".weight", std::move(w), {}});
    l.bias = params_.size();
    params_.push_back({name + ".bias", std::move(b), {}});
    return l;
}

Encoder::Norm Encoder::add_norm(const std::string& name, std::size_t dim) {
    Norm n;
    n.gain = params_.size();
    params_.push_back({name + ".gain", num::Tensor({dim}, 1.0), {}});
    n.bias = params_.size();
    params_.push_back({name + ".bias", num::Tensor({dim}, 0.0), {}});
    return n;
}

Encoder::Encoder(const EncoderConfig& config, const InputLayout& layout, std::mt19937_64& rng)
    : config_(config), layout_(layout) {
    config_.validate();
    if (layout_.n_tokens() == 0) throw std::invalid_argument("encoder needs at least one input feature");
    const std::size_t d = config_.embed_dim;

    for (std::size_t f = 0; f < layout_.n_categorical(); ++f) {
        num::Tensor table({layout_.vocab_sizes[f], d});
        num::init_uniform_fan_in(table, 1, rng);  // a one-hot lookup has fan-in 1
        embeddings_.push_back(params_.size());
        params_.push_back({"embedding." + std::to_string(f), std::move(table), {}});
    }

    if (config_.kind == EncoderKind::transformer) {
        if (layout_.n_numerical > 0) numeric_proj_ = add_linear("numeric_proj", layout_.n_numerical, d, rng);
        adjust_ = add_linear("adjust", d, d, rng);
        for (std::size_t i = 0; i < config_.n_layers; ++i) {
            const std::string p = "block" + std::to_string(i);
            Block b;
            b.attn_norm = add_norm(p + ".attn_norm", d);
            b.query = add_linear(p + ".query", d, d, rng);
            b.key = add_linear(p + ".key", d, d, rng);
            b.value = add_linear(p + ".value", d, d, rng);
            b.out = add_linear(p + ".out", d, d, rng);
            b.ffn_norm = add_norm(p + ".ffn_norm", d);
            b.ffn_in = add_linear(p + ".ffn_in", d, config_.ffn_hidden, rng);
            b.ffn_out = add_linear(p + ".ffn_out", config_.ffn_hidden, d, rng);
            blocks_.push_back(b);
        }
        final_norm_ = add_norm("final_norm", d);
    } else {
        const std::size_t in = layout_.n_categorical() * d + layout_.n_numerical;
        mlp_hidden_ = add_linear("mlp_hidden", in, config_.ffn_hidden, rng);
        mlp_out_ = add_linear("mlp_out", config_.ffn_hidden, d, rng);
    }
}

Var Encoder::apply(num::Tape& tape, const Linear& l, Var x) {
    return num::add_bias(num::matmul(x, tape.param(params_[l.weight])), tape.param(params_[l.bias]));
}

Var Encoder::apply(num::Tape& tape, const Norm& n, Var x) {
    return num::layer_norm(x, tape.param(params_[n.gain]), tape.param(params_[n.bias]));
}

std::vector<Var> Encoder::tokens(num::Tape& tape, const data::Batch& batch) {
    std::vector<Var> out;
    const std::size_t c = layout_.n_categorical();
    if (batch.n_categorical != c) {
        throw std::invalid_argument("batch has " + std::to_string(batch.n_categorical) + " categorical fields, model " +
                                    std::to_string(c));
    }
    for (std::size_t f = 0; f < c; ++f) {
        std::vector<std::size_t> idx(batch.size);
        for (std::size_t i = 0; i < batch.size; ++i) idx[i] = batch.cat(i, f);
        out.push_back(num::gather_rows(tape.param(params_[embeddings_[f]]), std::move(idx)));
    }
    if (layout_.n_numerical > 0) out.push_back(project_numerical(tape, batch));
    return out;
}

Var Encoder::embed_categorical(num::Tape& tape, const data::Batch& batch) {
    auto toks = tokens(tape, batch);
    if (layout_.n_numerical > 0) toks.pop_back();
    if (toks.empty()) throw std::invalid_argument("model has no categorical fields");
    return num::reshape(num::concat_cols(toks), {batch.size, toks.size(), config_.embed_dim});
}

Var Encoder::project_numerical(num::Tape& tape, const data::Batch& batch) {
    if (layout_.n_numerical == 0) throw std::invalid_argument("model has no numerical fields");
    if (batch.numerical.rank() != 2 || batch.numerical.dim(1) != layout_.n_numerical) {
        throw num::DimensionError("numerical batch " + num::shape_string(batch.numerical.shape()) +
                                  " does not match model width " + std::to_string(layout_.n_numerical));
    }
    if (config_.kind != EncoderKind::transformer) throw std::logic_error("MLP encoder has no numerical projection");
    return num::relu(apply(tape, numeric_proj_, tape.constant(batch.numerical)));
}

Var Encoder::attention(num::Tape& tape, const Block& b, Var x, std::size_t batch, std::size_t n_tokens,
                       AttentionTrace* trace) {
    const std::size_t d = config_.embed_dim;
    const std::size_t h = config_.n_heads;
    const std::size_t dh = d / h;
    auto heads = [&](Var v) {
        // [B*T, D] -> [B*H, T, dh]
        return num::reshape(num::swap_axes12(num::reshape(v, {batch, n_tokens, h, dh})), {batch * h, n_tokens, dh});
    };
    Var q = heads(apply(tape, b.query, x));
    Var k = heads(apply(tape, b.key, x));
    Var v = heads(apply(tape, b.value, x));
    Var scores = num::scale(num::batched_matmul(q, k, true), 1.0 / std::sqrt(static_cast<double>(dh)));
    Var weights = num::softmax(scores);
    if (trace) trace->weights.push_back(weights);
    Var context = num::batched_matmul(weights, v, false);
    Var merged = num::reshape(num::swap_axes12(num::reshape(context, {batch, h, n_tokens, dh})), {batch * n_tokens, d});
    return apply(tape, b.out, merged);
}

Var Encoder::encode_tokens(num::Tape& tape, std::span<const Var> toks, AttentionTrace* trace) {
    if (toks.empty()) throw std::invalid_argument("encode_tokens needs at least one token");
    const std::size_t batch = toks[0].value().dim(0);
    const std::size_t n_tokens = toks.size();
    const std::size_t d = config_.embed_dim;

    // [B, T*D] is row-major identical to [B*T, D]
    Var x = num::reshape(num::concat_cols(toks), {batch * n_tokens, d});
    x = apply(tape, adjust_, x);
    for (const auto& b : blocks_) {
        x = num::add(x, attention(tape, b, apply(tape, b.attn_norm, x), batch, n_tokens, trace));
        Var ff = apply(tape, b.ffn_out, num::relu(apply(tape, b.ffn_in, apply(tape, b.ffn_norm, x))));
        x = num::add(x, ff);
    }
    x = apply(tape, final_norm_, x);
    return num::mean_axis1(num::reshape(x, {batch, n_tokens, d}));
}

Var Encoder::encode_mlp(num::Tape& tape, const data::Batch& batch) {
    if (config_.kind != EncoderKind::mlp) throw std::logic_error("encode_mlp called on a transformer encoder");
    std::vector<Var> parts;
    for (std::size_t f = 0; f < layout_.n_categorical(); ++f) {
        std::vector<std::size_t> idx(batch.size);
        for (std::size_t i = 0; i < batch.size; ++i) idx[i] = batch.cat(i, f);
        parts.push_back(num::gather_rows(tape.param(params_[embeddings_[f]]), std::move(idx)));
    }
    if (layout_.n_numerical > 0) parts.push_back(tape.constant(batch.numerical));
    Var x = num::concat_cols(parts);
    x = num::relu(apply(tape, mlp_hidden_, x));
    return num::relu(apply(tape, mlp_out_, x));
}

Var Encoder::encode(num::Tape& tape, const data::Batch& batch, AttentionTrace* trace) {
    if (config_.kind == EncoderKind::mlp) return encode_mlp(tape, batch);
    auto toks = tokens(tape, batch);
    return encode_tokens(tape, toks, trace);
}

}  // namespace tabppo::model
