// Copyright 2026 The GeoQA Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "geoqa/error.hpp"
#include "geoqa/random.hpp"
#include "geoqa/textpipe.hpp"

namespace geoqa::nmt {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;
using Vector = Eigen::VectorXd;

struct Hyperparams {
  int embed_dim = 64;
  int hidden_dim = 128;  // per encoder direction; also the decoder state size
  int attn_dim = 128;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs = 200;
  int max_decode_len = 60;
  std::uint64_t seed = 0;

  void validate() const {
    if (embed_dim <= 0 || hidden_dim <= 0 || attn_dim <= 0 || batch_size <= 0 || max_decode_len <= 0) {
      throw ArgumentError("model dimensions, batch size and decode length must be positive");
    }
    if (!(adam_beta1 > 0 && adam_beta1 < 1 && adam_beta2 > 0 && adam_beta2 < 1)) {
      throw ArgumentError("Adam betas must lie in (0, 1)");
    }
    if (epochs < 1) throw ArgumentError("epochs must be at least 1");
    if (!(learning_rate > 0) || !(adam_eps > 0)) throw ArgumentError("learning rate and epsilon must be positive");
  }

  bool operator==(const Hyperparams&) const = default;
};

/// GRU gate weights with column blocks [update | reset | candidate].
/// W: input x 3h, U: h x 3h, b: 1 x 3h. The candidate applies the reset
/// gate to the recurrent product: n = tanh(x Wn + r * (h Un) + bn).
struct GruWeights {
  Matrix W;
  Matrix U;
  Matrix b;
};

struct ModelParams {
  Matrix src_embed;  // src_vocab x embed
  Matrix tgt_embed;  // tgt_vocab x embed
  GruWeights enc_fwd;
  GruWeights enc_bwd;
  GruWeights dec;    // input = [embedding ; context], embed + 2h wide
  Matrix attn_W1;    // 2h x attn
  Matrix attn_W2;    // h x attn
  Matrix attn_v;     // attn x 1
  Matrix out_W;      // h x tgt_vocab
  Matrix out_b;      // 1 x tgt_vocab

  static constexpr std::size_t kTensorCount = 16;

  static const std::array<std::string_view, kTensorCount>& names() {
    static const std::array<std::string_view, kTensorCount> kNames = {
        "src_embed", "tgt_embed", "enc_fwd.W", "enc_fwd.U", "enc_fwd.b", "enc_bwd.W", "enc_bwd.U", "enc_bwd.b",
        "dec.W",     "dec.U",     "dec.b",     "attn.W1",   "attn.W2",   "attn.v",    "out.W",     "out.b"};
    return kNames;
  }

  std::array<Matrix*, kTensorCount> tensors() {
    return {&src_embed, &tgt_embed, &enc_fwd.W, &enc_fwd.U, &enc_fwd.b, &enc_bwd.W, &enc_bwd.U, &enc_bwd.b,
            &dec.W,     &dec.U,     &dec.b,     &attn_W1,   &attn_W2,   &attn_v,    &out_W,     &out_b};
  }

  std::array<const Matrix*, kTensorCount> tensors() const {
    return {&src_embed, &tgt_embed, &enc_fwd.W, &enc_fwd.U, &enc_fwd.b, &enc_bwd.W, &enc_bwd.U, &enc_bwd.b,
            &dec.W,     &dec.U,     &dec.b,     &attn_W1,   &attn_W2,   &attn_v,    &out_W,     &out_b};
  }

  static std::string_view name(std::size_t i) { return names()[i]; }

  int hidden_dim() const { return static_cast<int>(enc_fwd.U.rows()); }
  int embed_dim() const { return static_cast<int>(src_embed.cols()); }
  int attn_dim() const { return static_cast<int>(attn_W1.cols()); }
  Eigen::Index src_vocab() const { return src_embed.rows(); }
  Eigen::Index tgt_vocab() const { return tgt_embed.rows(); }

  ModelParams zeros_like() const {
    ModelParams z = *this;
    for (Matrix* m : z.tensors()) m->setZero();
    return z;
  }

  bool operator==(const ModelParams& other) const {
    auto a = tensors();
    auto b = other.tensors();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i]->rows() != b[i]->rows() || a[i]->cols() != b[i]->cols() || *a[i] != *b[i]) return false;
    }
    return true;
  }
};

/// Expected (rows, cols) of every tensor, in ModelParams::tensors() order.
inline std::vector<std::pair<Eigen::Index, Eigen::Index>> tensor_shapes(const Hyperparams& hp, Eigen::Index src_vocab,
                                                                        Eigen::Index tgt_vocab) {
  const Eigen::Index e = hp.embed_dim, h = hp.hidden_dim, a = hp.attn_dim;
  return {{src_vocab, e}, {tgt_vocab, e}, {e, 3 * h},         {h, 3 * h}, {1, 3 * h}, {e, 3 * h},
          {h, 3 * h},     {1, 3 * h},     {e + 2 * h, 3 * h}, {h, 3 * h}, {1, 3 * h}, {2 * h, a},
          {h, a},         {a, 1},         {h, tgt_vocab},     {1, tgt_vocab}};
}

/// Glorot-uniform matrices, zero biases; deterministic per hp.seed.
inline ModelParams init_model(const Hyperparams& hp, std::size_t src_vocab_size, std::size_t tgt_vocab_size) {
  hp.validate();
  if (src_vocab_size < 4 || tgt_vocab_size < 4) throw ArgumentError("vocabularies need the 4 reserved tokens");
  ModelParams p;
  const auto shapes = tensor_shapes(hp, Eigen::Index(src_vocab_size), Eigen::Index(tgt_vocab_size));
  auto ts = p.tensors();
  Rng rng(hp.seed);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto [rows, cols] = shapes[i];
    ts[i]->setZero(rows, cols);
    const std::string_view n = ModelParams::name(i);
    if (n.size() >= 2 && n.substr(n.size() - 2) == ".b") continue;
    const double s = std::sqrt(6.0 / double(rows + cols));
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) (*ts[i])(r, c) = rng.uniform(-s, s);
    }
  }
  return p;
}

namespace detail {

inline Matrix sigmoid(const Matrix& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }

struct GruCache {
  Matrix h_prev, z, r, n, ghn;
  Vector mask;  // empty when every row is live
};

/// One batched step; rows with mask 0 carry h_prev through unchanged.
inline Matrix gru_forward(const GruWeights& w, const Matrix& gx, const Matrix& h_prev, const Vector* mask,
                          GruCache* cache) {
  const Eigen::Index h = h_prev.cols();
  const Matrix gh = h_prev * w.U;
  Matrix z = sigmoid(gx.leftCols(h) + gh.leftCols(h));
  Matrix r = sigmoid(gx.middleCols(h, h) + gh.middleCols(h, h));
  Matrix ghn = gh.rightCols(h);
  Matrix n = (gx.rightCols(h).array() + r.array() * ghn.array()).tanh().matrix();
  Matrix out = (z.array() * h_prev.array() + (1.0 - z.array()) * n.array()).matrix();
  if (mask != nullptr) out = h_prev + ((out - h_prev).array().colwise() * mask->array()).matrix();
  if (cache != nullptr) {
    cache->h_prev = h_prev;
    cache->z = std::move(z);
    cache->r = std::move(r);
    cache->n = std::move(n);
    cache->ghn = std::move(ghn);
    cache->mask = mask != nullptr ? *mask : Vector();
  }
  return out;
}

/// Returns d(h_prev); writes d(gx) and accumulates dU into `grad`.
inline Matrix gru_backward(const GruWeights& w, GruWeights& grad, const GruCache& c, const Matrix& dh_out,
                           Matrix& dgx) {
  using Eigen::Array;
  Matrix dh_live = dh_out;
  Matrix dh_prev;
  if (c.mask.size() > 0) {
    dh_live = (dh_out.array().colwise() * c.mask.array()).matrix();
    dh_prev = (dh_out.array().colwise() * (1.0 - c.mask.array())).matrix();
  } else {
    dh_prev = Matrix::Zero(dh_out.rows(), dh_out.cols());
  }
  const auto z = c.z.array();
  const auto r = c.r.array();
  const auto n = c.n.array();
  const Eigen::ArrayXXd dz = dh_live.array() * (c.h_prev.array() - n);
  const Eigen::ArrayXXd dn = dh_live.array() * (1.0 - z);
  dh_prev.array() += dh_live.array() * z;
  const Eigen::ArrayXXd dan = dn * (1.0 - n * n);
  const Eigen::ArrayXXd dar = dan * c.ghn.array() * r * (1.0 - r);
  const Eigen::ArrayXXd daz = dz * z * (1.0 - z);
  const Eigen::Index h = c.z.cols();
  dgx.resize(dh_out.rows(), 3 * h);
  dgx.leftCols(h) = daz.matrix();
  dgx.middleCols(h, h) = dar.matrix();
  dgx.rightCols(h) = dan.matrix();
  Matrix dgh = dgx;
  dgh.rightCols(h) = (dan * r).matrix();
  grad.U.noalias() += c.h_prev.transpose() * dgh;
  dh_prev.noalias() += dgh * w.U.transpose();
  return dh_prev;
}

inline void accumulate_input_grads(const Matrix& x, const Matrix& dgx, GruWeights& grad) {
  grad.W.noalias() += x.transpose() * dgx;
  grad.b += dgx.colwise().sum();
}

struct AttentionTrace {
  Matrix t;           // tanh(keys + query), len x attn
  RowVector weights;  // softmax over source positions
  RowVector context;  // weights * annotations
};

inline AttentionTrace attend(const Matrix& keys, const Matrix& annotations, const RowVector& query,
                             const Matrix& v) {
  AttentionTrace tr;
  tr.t = (keys.rowwise() + query).array().tanh().matrix();
  const Vector scores = tr.t * v;
  const double mx = scores.maxCoeff();
  tr.weights = (scores.array() - mx).exp().matrix().transpose();
  tr.weights /= tr.weights.sum();
  tr.context = tr.weights * annotations;
  return tr;
}

inline void check_ids(const textpipe::PaddedIds& ids, Eigen::Index vocab) {
  for (int id : ids.ids) {
    if (id < 0 || id >= vocab) {
      throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary of size " +
                              std::to_string(vocab));
    }
  }
}

inline Matrix gather_rows(const Matrix& table, const textpipe::PaddedIds& ids, std::size_t col) {
  Matrix out(Eigen::Index(ids.rows), table.cols());
  for (std::size_t r = 0; r < ids.rows; ++r) out.row(Eigen::Index(r)) = table.row(ids.at(r, col));
  return out;
}

inline void scatter_rows(Matrix& table, const textpipe::PaddedIds& ids, std::size_t col, const Matrix& d) {
  for (std::size_t r = 0; r < ids.rows; ++r) table.row(ids.at(r, col)) += d.row(Eigen::Index(r));
}

struct EncoderTrace {
  std::vector<Matrix> x;
  std::vector<Vector> mask;
  std::vector<GruCache> fwd, bwd;
};

}  // namespace detail

struct EncoderOutput {
  std::vector<Matrix> annotations;  // per sequence: length x 2h
  Matrix final_state;               // batch x h: last live forward state
};

/// Bidirectional GRU over a padded batch. Positions past a row's length are
/// masked out of both directions and excluded from its annotations.
inline EncoderOutput encode_batch(const ModelParams& p, const textpipe::PaddedIds& src,
                                  detail::EncoderTrace* trace = nullptr) {
  detail::check_ids(src, p.src_vocab());
  const auto B = Eigen::Index(src.rows);
  const std::size_t L = src.cols;
  const Eigen::Index h = p.hidden_dim();
  for (std::size_t len : src.lengths) {
    if (len == 0) throw ArgumentError("source sequences must be non-empty");
  }
  std::vector<Matrix> x(L);
  std::vector<Vector> mask(L);
  for (std::size_t t = 0; t < L; ++t) {
    x[t] = detail::gather_rows(p.src_embed, src, t);
    mask[t].resize(B);
    for (Eigen::Index b = 0; b < B; ++b) mask[t](b) = t < src.lengths[std::size_t(b)] ? 1.0 : 0.0;
  }
  std::vector<Matrix> hf(L), hb(L);
  std::vector<detail::GruCache> cf(trace ? L : 0), cb(trace ? L : 0);
  Matrix state = Matrix::Zero(B, h);
  for (std::size_t t = 0; t < L; ++t) {
    const Matrix gx = (x[t] * p.enc_fwd.W).rowwise() + p.enc_fwd.b.row(0);
    state = detail::gru_forward(p.enc_fwd, gx, state, &mask[t], trace ? &cf[t] : nullptr);
    hf[t] = state;
  }
  EncoderOutput out;
  out.final_state = state;
  state = Matrix::Zero(B, h);
  for (std::size_t t = L; t-- > 0;) {
    const Matrix gx = (x[t] * p.enc_bwd.W).rowwise() + p.enc_bwd.b.row(0);
    state = detail::gru_forward(p.enc_bwd, gx, state, &mask[t], trace ? &cb[t] : nullptr);
    hb[t] = state;
  }
  out.annotations.resize(src.rows);
  for (Eigen::Index b = 0; b < B; ++b) {
    const std::size_t len = src.lengths[std::size_t(b)];
    Matrix& a = out.annotations[std::size_t(b)];
    a.resize(Eigen::Index(len), 2 * h);
    for (std::size_t t = 0; t < len; ++t) {
      a.row(Eigen::Index(t)).head(h) = hf[t].row(b);
      a.row(Eigen::Index(t)).tail(h) = hb[t].row(b);
    }
  }
  if (trace != nullptr) {
    trace->x = std::move(x);
    trace->mask = std::move(mask);
    trace->fwd = std::move(cf);
    trace->bwd = std::move(cb);
  }
  return out;
}

struct EncodedSequence {
  Matrix annotations;  // length x 2h
  RowVector final_state;
};

inline EncodedSequence encode_sequence(const ModelParams& p, const std::vector<int>& ids, std::size_t length) {
  if (length > ids.size()) throw ArgumentError("length exceeds the id sequence");
  const std::vector<int> used(ids.begin(), ids.begin() + std::ptrdiff_t(length));
  auto out = encode_batch(p, textpipe::pad_sequences({used}));
  return {std::move(out.annotations[0]), out.final_state.row(0)};
}

struct AttentionResult {
  RowVector context;
  RowVector weights;
};

/// Additive attention: score_i = v . tanh(a_i W1 + s W2), softmax over i.
inline AttentionResult attention_step(const ModelParams& p, const RowVector& state, const Matrix& annotations) {
  const Matrix keys = annotations * p.attn_W1;
  const RowVector query = state * p.attn_W2;
  auto tr = detail::attend(keys, annotations, query, p.attn_v);
  return {std::move(tr.context), std::move(tr.weights)};
}

struct DecodeStepResult {
  RowVector logits;
  RowVector state;
  RowVector weights;
};

/// Attention on the previous state, then the decoder GRU consumes
/// [embedding(prev) ; context]; logits project the new state.
inline DecodeStepResult decode_step(const ModelParams& p, int prev_id, const RowVector& state,
                                    const Matrix& annotations) {
  if (prev_id < 0 || prev_id >= p.tgt_vocab()) {
    throw std::out_of_range("target id " + std::to_string(prev_id) + " outside vocabulary");
  }
  const Eigen::Index e = p.embed_dim();
  const auto att = attention_step(p, state, annotations);
  const Matrix gx = p.tgt_embed.row(prev_id) * p.dec.W.topRows(e) +
                    att.context * p.dec.W.bottomRows(p.dec.W.rows() - e) + p.dec.b;
  const Matrix s = detail::gru_forward(p.dec, gx, state, nullptr, nullptr);
  DecodeStepResult out;
  out.state = s.row(0);
  out.logits = out.state * p.out_W + p.out_b;
  out.weights = att.weights;
  return out;
}

/// Mean over unmasked positions of -log softmax(logits)[target].
inline double sequence_loss(const Matrix& logits, const std::vector<int>& targets, const std::vector<bool>& mask) {
  if (Eigen::Index(targets.size()) != logits.rows() || mask.size() != targets.size()) {
    throw ArgumentError("logits, targets and mask lengths differ");
  }
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    if (!mask[t]) continue;
    const auto row = logits.row(Eigen::Index(t));
    const double mx = row.maxCoeff();
    const double lse = mx + std::log((row.array() - mx).exp().sum());
    total += lse - row(targets[t]);
    ++count;
  }
  if (count == 0) throw ArgumentError("no supervised positions in the mask");
  return total / double(count);
}

struct BatchLoss {
  double loss = 0.0;       // mean over supervised target positions
  std::size_t count = 0;   // number of supervised positions
};

/// Teacher-forced forward pass over a batch; with `grad` non-null also runs
/// the exact reverse pass and accumulates d(loss)/d(param) into it.
/// Target rows are `<start> y1 .. yn <end>` padded with `<pad>`.
inline BatchLoss run_batch(const ModelParams& p, const textpipe::Batch& batch, ModelParams* grad = nullptr) {
  const auto& tgt = batch.targets;
  detail::check_ids(tgt, p.tgt_vocab());
  if (batch.inputs.rows != tgt.rows) throw ArgumentError("source and target batch sizes differ");
  const auto B = Eigen::Index(tgt.rows);
  const Eigen::Index h = p.hidden_dim();
  const Eigen::Index e = p.embed_dim();
  const std::size_t steps = tgt.cols > 0 ? tgt.cols - 1 : 0;

  detail::EncoderTrace enc_trace;
  EncoderOutput enc = encode_batch(p, batch.inputs, grad ? &enc_trace : nullptr);
  std::vector<Matrix> keys(tgt.rows);
  for (std::size_t b = 0; b < tgt.rows; ++b) keys[b] = enc.annotations[b] * p.attn_W1;

  struct Step {
    Matrix s_prev, y, ctx, s, probs;
    std::vector<detail::AttentionTrace> attn;
    detail::GruCache gru;
  };
  std::vector<Step> trace(grad ? steps : 0);

  std::size_t count = 0;
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t b = 0; b < tgt.rows; ++b) count += tgt.at(b, t + 1) != textpipe::kPadId;
  }
  if (count == 0) throw ArgumentError("batch has no supervised target positions");

  double total = 0.0;
  Matrix s = enc.final_state;
  const auto W_emb = p.dec.W.topRows(e);
  const auto W_ctx = p.dec.W.bottomRows(2 * h);
  for (std::size_t t = 0; t < steps; ++t) {
    const Matrix q = s * p.attn_W2;
    Matrix ctx(B, 2 * h);
    std::vector<detail::AttentionTrace> attn(tgt.rows);
    for (Eigen::Index b = 0; b < B; ++b) {
      attn[std::size_t(b)] = detail::attend(keys[std::size_t(b)], enc.annotations[std::size_t(b)], q.row(b), p.attn_v);
      ctx.row(b) = attn[std::size_t(b)].context;
    }
    const Matrix y = detail::gather_rows(p.tgt_embed, tgt, t);
    const Matrix gx = ((y * W_emb + ctx * W_ctx).rowwise() + p.dec.b.row(0));
    detail::GruCache gc;
    Matrix s_new = detail::gru_forward(p.dec, gx, s, nullptr, grad ? &gc : nullptr);
    Matrix logits = (s_new * p.out_W).rowwise() + p.out_b.row(0);
    const Vector mx = logits.rowwise().maxCoeff();
    Matrix probs = (logits.colwise() - mx).array().exp().matrix();
    const Vector z = probs.rowwise().sum();
    for (Eigen::Index b = 0; b < B; ++b) {
      const int target = tgt.at(std::size_t(b), t + 1);
      if (target != textpipe::kPadId) total += mx(b) + std::log(z(b)) - logits(b, target);
      probs.row(b) /= z(b);
    }
    if (grad) {
      trace[t] = Step{s, y, ctx, s_new, std::move(probs), std::move(attn), std::move(gc)};
    }
    s = std::move(s_new);
  }
  BatchLoss result{total / double(count), count};
  if (!grad) return result;

  // Reverse pass.
  const double scale = 1.0 / double(count);
  std::vector<Matrix> d_ann(tgt.rows), d_keys(tgt.rows);
  for (std::size_t b = 0; b < tgt.rows; ++b) {
    d_ann[b] = Matrix::Zero(enc.annotations[b].rows(), 2 * h);
    d_keys[b] = Matrix::Zero(keys[b].rows(), p.attn_dim());
  }
  Matrix ds = Matrix::Zero(B, h);
  Matrix dgx;
  for (std::size_t t = steps; t-- > 0;) {
    Step& st = trace[t];
    Matrix dlogits = st.probs;
    for (Eigen::Index b = 0; b < B; ++b) {
      const int target = tgt.at(std::size_t(b), t + 1);
      if (target == textpipe::kPadId) {
        dlogits.row(b).setZero();
      } else {
        dlogits(b, target) -= 1.0;
      }
    }
    dlogits *= scale;
    grad->out_W.noalias() += st.s.transpose() * dlogits;
    grad->out_b += dlogits.colwise().sum();
    ds.noalias() += dlogits * p.out_W.transpose();

    Matrix ds_prev = detail::gru_backward(p.dec, grad->dec, st.gru, ds, dgx);
    Matrix dec_in(B, e + 2 * h);
    dec_in << st.y, st.ctx;
    detail::accumulate_input_grads(dec_in, dgx, grad->dec);
    detail::scatter_rows(grad->tgt_embed, tgt, t, dgx * W_emb.transpose());
    const Matrix dctx = dgx * W_ctx.transpose();

    Matrix dq(B, p.attn_dim());
    for (Eigen::Index b = 0; b < B; ++b) {
      const auto& at = st.attn[std::size_t(b)];
      const Matrix& ann = enc.annotations[std::size_t(b)];
      const RowVector dc = dctx.row(b);
      const Vector dw = ann * dc.transpose();
      d_ann[std::size_t(b)].noalias() += at.weights.transpose() * dc;
      const double inner = at.weights.dot(dw.transpose());
      const Vector dscore = (at.weights.transpose().array() * (dw.array() - inner)).matrix();
      grad->attn_v.noalias() += at.t.transpose() * dscore;
      const Matrix dpre = ((dscore * p.attn_v.transpose()).array() * (1.0 - at.t.array().square())).matrix();
      d_keys[std::size_t(b)] += dpre;
      dq.row(b) = dpre.colwise().sum();
    }
    grad->attn_W2.noalias() += st.s_prev.transpose() * dq;
    ds_prev.noalias() += dq * p.attn_W2.transpose();
    ds = std::move(ds_prev);
  }
  for (std::size_t b = 0; b < tgt.rows; ++b) {
    grad->attn_W1.noalias() += enc.annotations[b].transpose() * d_keys[b];
    d_ann[b].noalias() += d_keys[b] * p.attn_W1.transpose();
  }

  // Encoder: the decoder's initial state is the final forward state.
  const auto& src = batch.inputs;
  const std::size_t L = src.cols;
  Matrix dh = ds;
  for (std::size_t t = L; t-- > 0;) {
    for (Eigen::Index b = 0; b < B; ++b) {
      if (t < src.lengths[std::size_t(b)]) dh.row(b) += d_ann[std::size_t(b)].row(Eigen::Index(t)).head(h);
    }
    Matrix dh_prev = detail::gru_backward(p.enc_fwd, grad->enc_fwd, enc_trace.fwd[t], dh, dgx);
    detail::accumulate_input_grads(enc_trace.x[t], dgx, grad->enc_fwd);
    detail::scatter_rows(grad->src_embed, src, t, dgx * p.enc_fwd.W.transpose());
    dh = std::move(dh_prev);
  }
  dh = Matrix::Zero(B, h);
  for (std::size_t t = 0; t < L; ++t) {
    for (Eigen::Index b = 0; b < B; ++b) {
      if (t < src.lengths[std::size_t(b)]) dh.row(b) += d_ann[std::size_t(b)].row(Eigen::Index(t)).tail(h);
    }
    Matrix dh_prev = detail::gru_backward(p.enc_bwd, grad->enc_bwd, enc_trace.bwd[t], dh, dgx);
    detail::accumulate_input_grads(enc_trace.x[t], dgx, grad->enc_bwd);
    detail::scatter_rows(grad->src_embed, src, t, dgx * p.enc_bwd.W.transpose());
    dh = std::move(dh_prev);
  }
  return result;
}

struct Gradients {
  ModelParams grad;
  BatchLoss loss;
};

inline Gradients backward(const ModelParams& p, const textpipe::Batch& batch) {
  Gradients g{p.zeros_like(), {}};
  g.loss = run_batch(p, batch, &g.grad);
  return g;
}

struct OptimizerState {
  ModelParams m;
  ModelParams v;
  std::int64_t t = 0;

  static OptimizerState for_model(const ModelParams& p) { return {p.zeros_like(), p.zeros_like(), 0}; }
};

/// Bias-corrected Adam step applied in place.
inline void adam_update(ModelParams& params, const ModelParams& grads, OptimizerState& state, const Hyperparams& hp) {
  state.t += 1;
  const double b1 = hp.adam_beta1;
  const double b2 = hp.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, double(state.t));
  const double c2 = 1.0 - std::pow(b2, double(state.t));
  auto ps = params.tensors();
  auto gs = grads.tensors();
  auto ms = state.m.tensors();
  auto vs = state.v.tensors();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    auto g = gs[i]->array();
    ms[i]->array() = b1 * ms[i]->array() + (1.0 - b1) * g;
    vs[i]->array() = b2 * vs[i]->array() + (1.0 - b2) * g.square();
    ps[i]->array() -= hp.learning_rate * (ms[i]->array() / c1) / ((vs[i]->array() / c2).sqrt() + hp.adam_eps);
  }
}

/// Source ids for a question: its words without the `<start>`/`<end>`
/// markers. An empty question encodes as a lone `<end>`.
inline std::vector<int> source_ids(const textpipe::Vocab& vocab, std::string_view question) {
  auto words = textpipe::strip_markers(textpipe::tokenize(question));
  if (words.empty()) words.emplace_back(textpipe::kEnd);
  return textpipe::numericalize(vocab, words);
}

/// Target ids including both markers.
inline std::vector<int> target_ids(const textpipe::Vocab& vocab, std::string_view encoded_query) {
  return textpipe::numericalize(vocab, textpipe::tokenize(encoded_query));
}

struct Dataset {
  std::vector<std::vector<int>> sources;
  std::vector<std::vector<int>> targets;

  std::size_t size() const { return sources.size(); }
};

class DivergedError : public Error {
 public:
  DivergedError(int epoch, std::size_t batch)
      : Error("training diverged: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
              std::to_string(batch)),
        epoch_(epoch),
        batch_(batch) {}

  int epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  int epoch_;
  std::size_t batch_;
};

using ProgressSink = std::function<void(int epoch, double loss)>;

/// Mini-batch Adam with a seeded per-epoch shuffle. Returns the per-epoch
/// mean loss (token-weighted over the epoch's batches).
inline std::vector<double> train(ModelParams& params, OptimizerState& opt, const Dataset& data, const Hyperparams& hp,
                                 const ProgressSink& progress = {}) {
  hp.validate();
  if (data.size() == 0 || data.sources.size() != data.targets.size()) {
    throw ArgumentError("training data must be non-empty with matching sources and targets");
  }
  Rng rng(hp.seed + 1);
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<double> history;
  const auto bs = std::size_t(hp.batch_size);
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    rng.shuffle(order);
    double weighted = 0.0;
    std::size_t tokens = 0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += bs, ++batch_no) {
      std::vector<std::vector<int>> src, tgt;
      for (std::size_t k = start; k < std::min(start + bs, order.size()); ++k) {
        src.push_back(data.sources[order[k]]);
        tgt.push_back(data.targets[order[k]]);
      }
      auto g = backward(params, textpipe::make_batch(src, tgt));
      if (!std::isfinite(g.loss.loss)) throw DivergedError(epoch, batch_no);
      adam_update(params, g.grad, opt, hp);
      weighted += g.loss.loss * double(g.loss.count);
      tokens += g.loss.count;
    }
    history.push_back(weighted / double(tokens));
    if (progress) progress(epoch, history.back());
  }
  return history;
}

struct AttentionMatrix {
  Matrix weights;  // rows: emitted tokens (including <end> when reached), cols: source positions
};

struct Translation {
  std::vector<std::string> tokens;         // emitted target tokens, <end> excluded
  std::vector<std::string> row_labels;     // emitted tokens, <end> included when reached
  std::vector<std::string> column_labels;  // source tokens fed to the encoder
  AttentionMatrix attention;
  bool truncated = false;                  // stopped at max_decode_len without <end>
};

/// Greedy decoding from `<start>`; ties go to the lowest id.
inline Translation translate(const ModelParams& p, std::string_view question, const textpipe::Vocab& src_vocab,
                             const textpipe::Vocab& tgt_vocab, const Hyperparams& hp) {
  const auto ids = source_ids(src_vocab, question);
  const auto enc = encode_sequence(p, ids, ids.size());
  Translation out;
  for (int id : ids) out.column_labels.push_back(src_vocab.token(id));
  std::vector<RowVector> rows;
  RowVector state = enc.final_state;
  int prev = textpipe::kStartId;
  out.truncated = true;
  for (int step = 0; step < hp.max_decode_len; ++step) {
    auto r = decode_step(p, prev, state, enc.annotations);
    Eigen::Index best = 0;
    r.logits.maxCoeff(&best);
    rows.push_back(r.weights);
    state = r.state;
    prev = static_cast<int>(best);
    out.row_labels.push_back(tgt_vocab.token(prev));
    if (prev == textpipe::kEndId) {
      out.truncated = false;
      break;
    }
    out.tokens.push_back(tgt_vocab.token(prev));
  }
  out.attention.weights.resize(Eigen::Index(rows.size()), Eigen::Index(ids.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out.attention.weights.row(Eigen::Index(i)) = rows[i];
  return out;
}

}  // namespace geoqa::nmt
