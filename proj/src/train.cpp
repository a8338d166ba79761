// Copyright 2026 The HyCNN Toolkit Authors
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

#include "hycnn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hycnn {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kDivergenceCap = 1e12;

// Offsets of each parameter block in the flat vector.
struct ParamLayout {
  struct LayerOff {
    size_t v1, v2, w1, w2, b1, b2;
  };
  std::vector<LayerOff> layer;
  size_t out_v = 0, out_w = 0, out_b = 0, wq = 0;
  size_t total = 0;
};

ParamLayout layout_of(const ConvexNet& net) {
  ParamLayout lay;
  size_t off = 0;
  for (const auto& l : net.layers) {
    ParamLayout::LayerOff lo;
    lo.v1 = off; off += l.V1_raw.data().size();
    lo.v2 = off; off += l.V2_raw.data().size();
    lo.w1 = off; off += l.W1.data().size();
    lo.w2 = off; off += l.W2.data().size();
    lo.b1 = off; off += l.b1.size();
    lo.b2 = off; off += l.b2.size();
    lay.layer.push_back(lo);
  }
  lay.out_v = off; off += net.out.V_raw.data().size();
  lay.out_w = off; off += net.out.W.data().size();
  lay.out_b = off; off += net.out.b.size();
  lay.wq = off; off += net.Wq.data().size();
  lay.total = off;
  return lay;
}

void copy_in(const std::vector<double>& src, Vector& dst, size_t off) {
  std::copy(src.begin(), src.end(), dst.begin() + off);
}

void copy_out(const Vector& src, size_t off, std::vector<double>& dst) {
  std::copy(src.begin() + off, src.begin() + off + dst.size(), dst.begin());
}

}  // namespace

size_t param_count(const ConvexNet& net) { return layout_of(net).total; }

Vector flatten_params(const ConvexNet& net) {
  const ParamLayout lay = layout_of(net);
  Vector flat(lay.total);
  for (int i = 0; i < net.depth(); ++i) {
    const auto& l = net.layers[i];
    const auto& lo = lay.layer[i];
    copy_in(l.V1_raw.data(), flat, lo.v1);
    copy_in(l.V2_raw.data(), flat, lo.v2);
    copy_in(l.W1.data(), flat, lo.w1);
    copy_in(l.W2.data(), flat, lo.w2);
    copy_in(l.b1, flat, lo.b1);
    copy_in(l.b2, flat, lo.b2);
  }
  copy_in(net.out.V_raw.data(), flat, lay.out_v);
  copy_in(net.out.W.data(), flat, lay.out_w);
  copy_in(net.out.b, flat, lay.out_b);
  copy_in(net.Wq.data(), flat, lay.wq);
  return flat;
}

void unflatten_params(ConvexNet& net, const Vector& flat) {
  const ParamLayout lay = layout_of(net);
  if (flat.size() != lay.total)
    throw ContractViolation("unflatten_params: length mismatch");
  for (int i = 0; i < net.depth(); ++i) {
    auto& l = net.layers[i];
    const auto& lo = lay.layer[i];
    copy_out(flat, lo.v1, l.V1_raw.data());
    copy_out(flat, lo.v2, l.V2_raw.data());
    copy_out(flat, lo.w1, l.W1.data());
    copy_out(flat, lo.w2, l.W2.data());
    copy_out(flat, lo.b1, l.b1);
    copy_out(flat, lo.b2, l.b2);
  }
  copy_out(flat, lay.out_v, net.out.V_raw.data());
  copy_out(flat, lay.out_w, net.out.W.data());
  copy_out(flat, lay.out_b, net.out.b);
  copy_out(flat, lay.wq, net.Wq.data());
  net.bump_version();
  net.ensure_cache();
}

std::vector<uint8_t> trainable_mask(const ConvexNet& net) {
  const ParamLayout lay = layout_of(net);
  std::vector<uint8_t> mask(lay.total, 1);
  auto freeze = [&](size_t off, size_t n) {
    std::fill(mask.begin() + off, mask.begin() + off + n, 0);
  };
  const bool two_lane = net.gate.two_lane();
  for (int i = 0; i < net.depth(); ++i) {
    const auto& l = net.layers[i];
    const auto& lo = lay.layer[i];
    if (i == 0) {
      freeze(lo.v1, l.V1_raw.data().size());
      freeze(lo.v2, l.V2_raw.data().size());
    }
    if (!two_lane) {
      freeze(lo.v2, l.V2_raw.data().size());
      freeze(lo.w2, l.W2.data().size());
      freeze(lo.b2, l.b2.size());
    }
    const bool no_skip = net.arch == Arch::GroupMax || net.arch == Arch::MLP;
    if (no_skip && i > 0) {
      freeze(lo.w1, l.W1.data().size());
      freeze(lo.w2, l.W2.data().size());
    }
  }
  if (net.arch == Arch::GroupMax || net.arch == Arch::MLP)
    freeze(lay.out_w, net.out.W.data().size());
  return mask;
}

GradTape record_tape(const ConvexNet& net, const Vector& x) {
  GradTape tape;
  tape.x = x;
  tape.acts = forward_trace(net, x);
  tape.net_version = net.version;
  return tape;
}

double replay_tape(const ConvexNet& net, const GradTape& tape) {
  if (tape.net_version != net.version)
    throw ContractViolation("replay_tape: stale tape");
  const int L = net.depth();
  // Rebuild the last hidden state from the recorded pre-activations.
  Vector zl(L > 0 ? tape.acts.s[L - 1].size()
                  : static_cast<size_t>(net.input_dim));
  if (L > 0) {
    for (size_t j = 0; j < zl.size(); ++j)
      zl[j] = gate_value(net.gate, tape.acts.s[L - 1][j],
                         net.gate.two_lane() ? tape.acts.t[L - 1][j] : 0.0);
  }
  Matrix vout = net.effective_Vout();
  double y = net.out.b[0];
  for (int c = 0; c < vout.cols(); ++c) y += vout(0, c) * zl[c];
  for (int c = 0; c < net.out.W.cols(); ++c) y += net.out.W(0, c) * tape.x[c];
  return y;
}

void param_gradients_acc(const ConvexNet& net, const GradTape& tape,
                         double upstream, Vector& grad) {
  if (tape.net_version != net.version)
    throw ContractViolation("param_gradients: stale tape");
  const ParamLayout lay = layout_of(net);
  if (grad.size() != lay.total)
    throw ContractViolation("param_gradients: gradient buffer size mismatch");
  const int L = net.depth();
  const bool two_lane = net.gate.two_lane();
  const Vector& x = tape.x;

  // Output layer.
  const Matrix vout_eff = net.effective_Vout();
  {
    const Vector& zl = tape.acts.z[L];
    for (int c = 0; c < net.out.V_raw.cols(); ++c) {
      double g = upstream * zl[c];
      if (net.out.reparam) g *= sigmoid(net.out.V_raw(0, c));
      grad[lay.out_v + c] += g;
    }
    for (int c = 0; c < net.out.W.cols(); ++c)
      grad[lay.out_w + c] += upstream * x[c];
    grad[lay.out_b] += upstream;
  }

  Vector dz(vout_eff.cols());
  for (int c = 0; c < vout_eff.cols(); ++c) dz[c] = upstream * vout_eff(0, c);

  for (int i = L - 1; i >= 0; --i) {
    const HyLayer& l = net.layers[i];
    const auto& lo = lay.layer[i];
    const Vector& s = tape.acts.s[i];
    const Vector& t = tape.acts.t[i];
    const Vector& zprev = tape.acts.z[i];
    const size_t w = s.size();
    Vector a1(w), a2;
    if (two_lane) a2.resize(w);
    for (size_t j = 0; j < w; ++j) {
      double g1, g2;
      gate_grad(net.gate, s[j], two_lane ? t[j] : 0.0, g1, g2);
      a1[j] = dz[j] * g1;
      if (two_lane) a2[j] = dz[j] * g2;
    }
    const int pc = l.V1_raw.cols();
    // V1 / V2 with the softplus chain factor folded in where reparametrized.
    // The first-layer V is skipped: it multiplies z0 = 0.
    if (i > 0) {
      for (size_t r = 0; r < w; ++r) {
        const double a1r = a1[r];
        double* g1p = grad.data() + lo.v1 + r * pc;
        const double* raw1 = l.V1_raw.row(static_cast<int>(r));
        for (int c = 0; c < pc; ++c) {
          double g = a1r * zprev[c];
          if (l.reparam) g *= sigmoid(raw1[c]);
          g1p[c] += g;
        }
        if (two_lane) {
          const double a2r = a2[r];
          double* g2p = grad.data() + lo.v2 + r * pc;
          const double* raw2 = l.V2_raw.row(static_cast<int>(r));
          for (int c = 0; c < pc; ++c) {
            double g = a2r * zprev[c];
            if (l.reparam) g *= sigmoid(raw2[c]);
            g2p[c] += g;
          }
        }
      }
    }
    // W and b.
    for (size_t r = 0; r < w; ++r) {
      const double a1r = a1[r];
      double* gw1 = grad.data() + lo.w1 + r * net.input_dim;
      for (int c = 0; c < net.input_dim; ++c) gw1[c] += a1r * x[c];
      grad[lo.b1 + r] += a1r;
      if (two_lane) {
        const double a2r = a2[r];
        double* gw2 = grad.data() + lo.w2 + r * net.input_dim;
        for (int c = 0; c < net.input_dim; ++c) gw2[c] += a2r * x[c];
        grad[lo.b2 + r] += a2r;
      }
    }
    if (net.arch == Arch::ICNNq && i == 0) {
      Vector q = matvec(net.Wq, x);
      for (size_t r = 0; r < q.size(); ++r) {
        const double f = 2.0 * q[r] * a1[r];
        double* gq = grad.data() + lay.wq + r * net.input_dim;
        for (int c = 0; c < net.input_dim; ++c) gq[c] += f * x[c];
      }
    }
    // Propagate to the previous hidden state.
    if (i > 0) {
      const Matrix v1 = net.cache_valid() ? net.cached_V1(i) : net.effective_V1(i);
      Vector dznew = matvec_t(v1, a1);
      if (two_lane) {
        const Matrix v2 = net.cache_valid() ? net.cached_V2(i) : net.effective_V2(i);
        matvec_t_acc(v2, a2, dznew);
      }
      dz.swap(dznew);
    }
  }
}

Vector param_gradients(const ConvexNet& net, const GradTape& tape,
                       double upstream) {
  Vector grad(param_count(net), 0.0);
  param_gradients_acc(net, tape, upstream, grad);
  return grad;
}

double forward_record(const ConvexNet& net, const Vector& x,
                      GradWorkspace& ws) {
  if (static_cast<int>(x.size()) != net.input_dim)
    throw ContractViolation("forward_record: input length mismatch");
  const int L = net.depth();
  const bool two_lane = net.gate.two_lane();
  ws.z.resize(L + 1);
  ws.s.resize(L);
  ws.t.resize(L);
  ws.z[0].assign(net.input_dim, 0.0);
  for (int i = 0; i < L; ++i) {
    const HyLayer& l = net.layers[i];
    const Matrix& v1 = net.cache_valid() ? net.cached_V1(i) : net.effective_V1(i);
    ws.s[i] = l.b1;
    matvec_acc(v1, ws.z[i], ws.s[i]);
    matvec_acc(l.W1, x, ws.s[i]);
    if (net.arch == Arch::ICNNq && i == 0) {
      Vector q = matvec(net.Wq, x);
      for (size_t j = 0; j < ws.s[i].size(); ++j) ws.s[i][j] += q[j] * q[j];
    }
    if (two_lane) {
      const Matrix& v2 = net.cache_valid() ? net.cached_V2(i) : net.effective_V2(i);
      ws.t[i] = l.b2;
      matvec_acc(v2, ws.z[i], ws.t[i]);
      matvec_acc(l.W2, x, ws.t[i]);
    }
    const size_t w = ws.s[i].size();
    ws.z[i + 1].resize(w);
    for (size_t j = 0; j < w; ++j)
      ws.z[i + 1][j] =
          gate_value(net.gate, ws.s[i][j], two_lane ? ws.t[i][j] : 0.0);
  }
  double y = net.out.b[0];
  const Matrix& vout = net.cache_valid() ? net.cached_Vout() : net.effective_Vout();
  for (int c = 0; c < vout.cols(); ++c) y += vout(0, c) * ws.z[L][c];
  for (int c = 0; c < net.out.W.cols(); ++c) y += net.out.W(0, c) * x[c];
  return y;
}

void param_gradients_ws(const ConvexNet& net, const Vector& x,
                        GradWorkspace& ws, double upstream, Vector& grad) {
  const ParamLayout lay = layout_of(net);
  if (grad.size() != lay.total)
    throw ContractViolation("param_gradients_ws: gradient buffer size mismatch");
  const int L = net.depth();
  const bool two_lane = net.gate.two_lane();

  const Matrix& vout = net.cache_valid() ? net.cached_Vout() : net.effective_Vout();
  {
    const Vector& zl = ws.z[L];
    for (int c = 0; c < net.out.V_raw.cols(); ++c) {
      double g = upstream * zl[c];
      if (net.out.reparam) g *= sigmoid(net.out.V_raw(0, c));
      grad[lay.out_v + c] += g;
    }
    for (int c = 0; c < net.out.W.cols(); ++c)
      grad[lay.out_w + c] += upstream * x[c];
    grad[lay.out_b] += upstream;
  }
  GradWorkspace& mws = ws;
  mws.dz.resize(vout.cols());
  for (int c = 0; c < vout.cols(); ++c) mws.dz[c] = upstream * vout(0, c);

  for (int i = L - 1; i >= 0; --i) {
    const HyLayer& l = net.layers[i];
    const auto& lo = lay.layer[i];
    const Vector& s = ws.s[i];
    const Vector& t = ws.t[i];
    const Vector& zprev = ws.z[i];
    const size_t w = s.size();
    mws.a1.resize(w);
    mws.a2.resize(w);
    for (size_t j = 0; j < w; ++j) {
      double g1, g2;
      gate_grad(net.gate, s[j], two_lane ? t[j] : 0.0, g1, g2);
      mws.a1[j] = mws.dz[j] * g1;
      mws.a2[j] = two_lane ? mws.dz[j] * g2 : 0.0;
    }
    const int pc = l.V1_raw.cols();
    if (i > 0) {
      const bool cache = net.cache_valid();
      for (size_t r = 0; r < w; ++r) {
        const double a1r = mws.a1[r];
        if (a1r != 0.0) {
          double* g1p = grad.data() + lo.v1 + r * pc;
          if (!l.reparam) {
            for (int c = 0; c < pc; ++c) g1p[c] += a1r * zprev[c];
          } else if (cache) {
            const double* ch = net.cached_V1_chain(i).row(static_cast<int>(r));
            for (int c = 0; c < pc; ++c) g1p[c] += a1r * zprev[c] * ch[c];
          } else {
            const double* raw1 = l.V1_raw.row(static_cast<int>(r));
            for (int c = 0; c < pc; ++c)
              g1p[c] += a1r * zprev[c] * sigmoid(raw1[c]);
          }
        }
        if (two_lane) {
          const double a2r = mws.a2[r];
          if (a2r != 0.0) {
            double* g2p = grad.data() + lo.v2 + r * pc;
            if (!l.reparam) {
              for (int c = 0; c < pc; ++c) g2p[c] += a2r * zprev[c];
            } else if (cache) {
              const double* ch = net.cached_V2_chain(i).row(static_cast<int>(r));
              for (int c = 0; c < pc; ++c) g2p[c] += a2r * zprev[c] * ch[c];
            } else {
              const double* raw2 = l.V2_raw.row(static_cast<int>(r));
              for (int c = 0; c < pc; ++c)
                g2p[c] += a2r * zprev[c] * sigmoid(raw2[c]);
            }
          }
        }
      }
    }
    for (size_t r = 0; r < w; ++r) {
      const double a1r = mws.a1[r];
      if (a1r != 0.0) {
        double* gw1 = grad.data() + lo.w1 + r * net.input_dim;
        for (int c = 0; c < net.input_dim; ++c) gw1[c] += a1r * x[c];
        grad[lo.b1 + r] += a1r;
      }
      if (two_lane) {
        const double a2r = mws.a2[r];
        if (a2r != 0.0) {
          double* gw2 = grad.data() + lo.w2 + r * net.input_dim;
          for (int c = 0; c < net.input_dim; ++c) gw2[c] += a2r * x[c];
          grad[lo.b2 + r] += a2r;
        }
      }
    }
    if (net.arch == Arch::ICNNq && i == 0) {
      Vector q = matvec(net.Wq, x);
      for (size_t r = 0; r < q.size(); ++r) {
        const double f = 2.0 * q[r] * mws.a1[r];
        double* gq = grad.data() + lay.wq + r * net.input_dim;
        for (int c = 0; c < net.input_dim; ++c) gq[c] += f * x[c];
      }
    }
    if (i > 0) {
      const Matrix& v1 = net.cache_valid() ? net.cached_V1(i) : net.effective_V1(i);
      mws.dz_next.assign(v1.cols(), 0.0);
      matvec_t_acc(v1, mws.a1, mws.dz_next);
      if (two_lane) {
        const Matrix& v2 = net.cache_valid() ? net.cached_V2(i) : net.effective_V2(i);
        matvec_t_acc(v2, mws.a2, mws.dz_next);
      }
      mws.dz.swap(mws.dz_next);
    }
  }
}

void grad_of_input_grad_acc(const ConvexNet& net, const Vector& x,
                            const Vector& v, double scale, Vector& grad) {
  if (!net.gate.smooth())
    throw ContractViolation(
        "grad_of_input_grad: gate must be LogSumExp or Softplus");
  if (static_cast<int>(x.size()) != net.input_dim ||
      static_cast<int>(v.size()) != net.input_dim)
    throw ContractViolation("grad_of_input_grad: bad input length");
  const ParamLayout lay = layout_of(net);
  if (grad.size() != lay.total)
    throw ContractViolation("grad_of_input_grad: gradient buffer size mismatch");
  const int L = net.depth();
  const bool two_lane = net.gate.two_lane();

  // Tangent-forward pass: carry (value, d/deps value) for the input path
  // x + eps v. The tangent of the output is <v, grad_x f(x)>.
  std::vector<Vector> zs(L + 1), zdot(L + 1), ss(L), ts(L), sdot(L), tdot(L);
  zs[0] = Vector(net.input_dim, 0.0);
  zdot[0] = Vector(net.input_dim, 0.0);
  std::vector<Matrix> v1eff(L), v2eff(L);
  for (int i = 0; i < L; ++i) {
    v1eff[i] = net.cache_valid() ? net.cached_V1(i) : net.effective_V1(i);
    if (two_lane)
      v2eff[i] = net.cache_valid() ? net.cached_V2(i) : net.effective_V2(i);
  }
  Vector wq_x, wq_v;
  if (net.arch == Arch::ICNNq) {
    wq_x = matvec(net.Wq, x);
    wq_v = matvec(net.Wq, v);
  }
  for (int i = 0; i < L; ++i) {
    const HyLayer& l = net.layers[i];
    ss[i] = l.b1;
    matvec_acc(v1eff[i], zs[i], ss[i]);
    matvec_acc(l.W1, x, ss[i]);
    sdot[i] = matvec(l.W1, v);
    matvec_acc(v1eff[i], zdot[i], sdot[i]);
    if (net.arch == Arch::ICNNq && i == 0) {
      for (size_t j = 0; j < ss[i].size(); ++j) {
        ss[i][j] += wq_x[j] * wq_x[j];
        sdot[i][j] += 2.0 * wq_x[j] * wq_v[j];
      }
    }
    if (two_lane) {
      ts[i] = l.b2;
      matvec_acc(v2eff[i], zs[i], ts[i]);
      matvec_acc(l.W2, x, ts[i]);
      tdot[i] = matvec(l.W2, v);
      matvec_acc(v2eff[i], zdot[i], tdot[i]);
    }
    const size_t w = ss[i].size();
    zs[i + 1].resize(w);
    zdot[i + 1].resize(w);
    for (size_t j = 0; j < w; ++j) {
      const double sj = ss[i][j];
      const double tj = two_lane ? ts[i][j] : 0.0;
      zs[i + 1][j] = gate_value(net.gate, sj, tj);
      double g1, g2;
      gate_grad(net.gate, sj, tj, g1, g2);
      zdot[i + 1][j] =
          g1 * sdot[i][j] + (two_lane ? g2 * tdot[i][j] : 0.0);
    }
  }

  // Reverse pass over the tangent computation. h = <v, grad_x f>.
  // p = dh/dz, q = dh/dzdot.
  const Matrix vout_eff = net.effective_Vout();
  Vector p(vout_eff.cols(), 0.0), q(vout_eff.cols());
  for (int c = 0; c < vout_eff.cols(); ++c) q[c] = scale * vout_eff(0, c);
  // h = Vout zdot_L + Wout v + ... : output-layer parameter gradients.
  {
    for (int c = 0; c < net.out.V_raw.cols(); ++c) {
      double g = scale * zdot[L][c];
      if (net.out.reparam) g *= sigmoid(net.out.V_raw(0, c));
      grad[lay.out_v + c] += g;
    }
    for (int c = 0; c < net.out.W.cols(); ++c)
      grad[lay.out_w + c] += scale * v[c];
    // d h / d out.b = 0.
  }

  for (int i = L - 1; i >= 0; --i) {
    const HyLayer& l = net.layers[i];
    const auto& lo = lay.layer[i];
    const size_t w = ss[i].size();
    Vector ds(w), dt, dsd(w), dtd;
    if (two_lane) {
      dt.resize(w);
      dtd.resize(w);
    }
    for (size_t j = 0; j < w; ++j) {
      const double sj = ss[i][j];
      const double tj = two_lane ? ts[i][j] : 0.0;
      double g1, g2, d11, d12, d22;
      gate_grad(net.gate, sj, tj, g1, g2);
      gate_grad2(net.gate, sj, tj, d11, d12, d22);
      const double sd = sdot[i][j];
      const double td = two_lane ? tdot[i][j] : 0.0;
      const double pj = p[j];
      const double qj = q[j];
      ds[j] = pj * g1 + qj * (d11 * sd + d12 * td);
      dsd[j] = qj * g1;
      if (two_lane) {
        dt[j] = pj * g2 + qj * (d12 * sd + d22 * td);
        dtd[j] = qj * g2;
      }
    }
    const int pc = l.V1_raw.cols();
    const Vector& zprev = zs[i];
    const Vector& zdprev = zdot[i];
    if (i > 0) {
      for (size_t r = 0; r < w; ++r) {
        double* g1p = grad.data() + lo.v1 + r * pc;
        const double dsr = ds[r];
        const double dsdr = dsd[r];
        const double* rawp = l.V1_raw.row(static_cast<int>(r));
        for (int c = 0; c < pc; ++c) {
          double g = dsr * zprev[c] + dsdr * zdprev[c];
          if (l.reparam) g *= sigmoid(rawp[c]);
          g1p[c] += g;
        }
        if (two_lane) {
          double* g2p = grad.data() + lo.v2 + r * pc;
          const double dtr = dt[r];
          const double dtdr = dtd[r];
          const double* rawq = l.V2_raw.row(static_cast<int>(r));
          for (int c = 0; c < pc; ++c) {
            double g = dtr * zprev[c] + dtdr * zdprev[c];
            if (l.reparam) g *= sigmoid(rawq[c]);
            g2p[c] += g;
          }
        }
      }
    }
    for (size_t r = 0; r < w; ++r) {
      double* gw1 = grad.data() + lo.w1 + r * net.input_dim;
      const double dsr = ds[r];
      const double dsdr = dsd[r];
      for (int c = 0; c < net.input_dim; ++c)
        gw1[c] += dsr * x[c] + dsdr * v[c];
      grad[lo.b1 + r] += dsr;
      if (two_lane) {
        double* gw2 = grad.data() + lo.w2 + r * net.input_dim;
        const double dtr = dt[r];
        const double dtdr = dtd[r];
        for (int c = 0; c < net.input_dim; ++c)
          gw2[c] += dtr * x[c] + dtdr * v[c];
        grad[lo.b2 + r] += dtr;
      }
    }
    if (net.arch == Arch::ICNNq && i == 0) {
      // s_j += (Wq x)_j^2, sdot_j += 2 (Wq x)_j (Wq v)_j.
      for (size_t r = 0; r < w; ++r) {
        const double c1 = 2.0 * wq_x[r] * ds[r];
        const double c2 = 2.0 * dsd[r];
        double* gq = grad.data() + lay.wq + r * net.input_dim;
        for (int c = 0; c < net.input_dim; ++c)
          gq[c] += c1 * x[c] + c2 * (wq_v[r] * x[c] + wq_x[r] * v[c]);
      }
    }
    if (i > 0) {
      Vector pnew = matvec_t(v1eff[i], ds);
      Vector qnew = matvec_t(v1eff[i], dsd);
      if (two_lane) {
        matvec_t_acc(v2eff[i], dt, pnew);
        matvec_t_acc(v2eff[i], dtd, qnew);
      }
      p.swap(pnew);
      q.swap(qnew);
    }
  }
}

Vector grad_of_input_grad(const ConvexNet& net, const Vector& x,
                          const Vector& v) {
  Vector grad(param_count(net), 0.0);
  grad_of_input_grad_acc(net, x, v, 1.0, grad);
  return grad;
}

// --- Adam ------------------------------------------------------------------

namespace {
void adam_update(Vector& params, const Vector& grads,
                 const std::vector<uint8_t>* mask, AdamState& st, double lr) {
  if (params.size() != grads.size())
    throw ContractViolation("adam_step: shape mismatch");
  if (st.m.empty()) {
    st.m.assign(params.size(), 0.0);
    st.v.assign(params.size(), 0.0);
  }
  if (st.m.size() != params.size())
    throw ContractViolation("adam_step: state shape mismatch");
  ++st.step;
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (size_t i = 0; i < params.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    const double g = grads[i];
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * g;
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * g * g;
    const double mhat = st.m[i] / c1;
    const double vhat = st.v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + st.eps);
  }
}
}  // namespace

void adam_step(Vector& params, const Vector& grads, AdamState& state,
               double lr) {
  adam_update(params, grads, nullptr, state, lr);
}

void adam_step(Vector& params, const Vector& grads,
               const std::vector<uint8_t>& mask, AdamState& state, double lr) {
  adam_update(params, grads, &mask, state, lr);
}

NetOptimizer::NetOptimizer(const ConvexNet& net, double beta1, double beta2,
                           double eps) {
  state.beta1 = beta1;
  state.beta2 = beta2;
  state.eps = eps;
  mask = trainable_mask(net);
}

void NetOptimizer::step(ConvexNet& net, const Vector& grad, double lr) {
  Vector params = flatten_params(net);
  adam_step(params, grad, mask, state, lr);
  unflatten_params(net, params);
}

// --- Schedules ---------------------------------------------------------------

Schedule Schedule::constant(double v) {
  Schedule s;
  s.kind = Kind::Constant;
  s.v0 = v;
  return s;
}

Schedule Schedule::cosine(double v0, double final_ratio, long T) {
  Schedule s;
  s.kind = Kind::Cosine;
  s.v0 = v0;
  s.final_ratio = final_ratio;
  s.horizon = T > 0 ? T : 1;
  return s;
}

Schedule Schedule::cyclic_cosine(double v0, long cycle_len,
                                 double decay_per_cycle, double floor_ratio,
                                 double floor_at_fraction) {
  Schedule s;
  s.kind = Kind::CyclicCosine;
  s.v0 = v0;
  s.cycle_len = cycle_len > 0 ? cycle_len : 1;
  s.decay_per_cycle = decay_per_cycle;
  s.floor_ratio = floor_ratio;
  s.floor_at_fraction = floor_at_fraction;
  return s;
}

double schedule_value(const Schedule& s, long t) {
  if (t < 0) t = 0;
  switch (s.kind) {
    case Schedule::Kind::Constant:
      return s.v0;
    case Schedule::Kind::Cosine: {
      if (t > s.horizon) t = s.horizon;
      const double vmin = s.v0 * s.final_ratio;
      const double phase = kPi * static_cast<double>(t) / static_cast<double>(s.horizon);
      return vmin + 0.5 * (s.v0 - vmin) * (1.0 + std::cos(phase));
    }
    case Schedule::Kind::CyclicCosine: {
      const long cycle = t / s.cycle_len;
      const double start = s.v0 * std::pow(s.decay_per_cycle, static_cast<double>(cycle));
      const double floor = s.floor_ratio * start;
      const double u = static_cast<double>(t % s.cycle_len) / static_cast<double>(s.cycle_len);
      const double phase = std::min(u / s.floor_at_fraction, 1.0);
      return floor + 0.5 * (start - floor) * (1.0 + std::cos(kPi * phase));
    }
  }
  return s.v0;
}

// --- Regression ----------------------------------------------------------------

double mse_on(const ConvexNet& net, const Matrix& X, const Vector& y) {
  double acc = 0.0;
  Vector x(X.cols());
  for (int i = 0; i < X.rows(); ++i) {
    std::copy(X.row(i), X.row(i) + X.cols(), x.begin());
    const double r = forward(net, x) - y[i];
    acc += r * r;
  }
  return acc / X.rows();
}

double RegressionResult::predict(const Vector& x) const {
  Vector xs(x.size());
  for (size_t i = 0; i < x.size(); ++i) xs[i] = (x[i] - x_mean[i]) / x_std[i];
  return y_mean + y_std * forward(net, xs);
}

RegressionResult train_regression(const ConvexNet& net0, const Matrix& X,
                                  const Vector& y, const TrainConfig& cfg,
                                  Rng& rng) {
  if (X.rows() < 1) throw ContractViolation("train_regression: empty data");
  if (X.rows() != static_cast<int>(y.size()))
    throw ContractViolation("train_regression: X/y length mismatch");
  const int n = X.rows();
  const int d = X.cols();
  const int batch = std::max(1, std::min(cfg.batch_size, n));

  RegressionResult res;
  res.net = net0;
  res.x_mean.assign(d, 0.0);
  res.x_std.assign(d, 1.0);
  Matrix Xs = X;
  Vector ys = y;
  if (cfg.standardize) {
    for (int c = 0; c < d; ++c) {
      double mean = 0.0;
      for (int r = 0; r < n; ++r) mean += X(r, c);
      mean /= n;
      double var = 0.0;
      for (int r = 0; r < n; ++r) var += (X(r, c) - mean) * (X(r, c) - mean);
      var /= n;
      const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
      res.x_mean[c] = mean;
      res.x_std[c] = sd;
      for (int r = 0; r < n; ++r) Xs(r, c) = (X(r, c) - mean) / sd;
    }
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : y) var += (v - mean) * (v - mean);
    var /= n;
    res.y_mean = mean;
    res.y_std = var > 0.0 ? std::sqrt(var) : 1.0;
    for (int r = 0; r < n; ++r) ys[r] = (y[r] - res.y_mean) / res.y_std;
  }
  const double unit = res.y_std * res.y_std;  // standardized -> original MSE

  res.net.ensure_cache();
  res.initial_mse = unit * mse_on(res.net, Xs, ys);

  NetOptimizer opt(res.net, cfg.beta1, cfg.beta2, cfg.adam_eps);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Vector grad(param_count(res.net), 0.0);
  Vector x(d);
  GradWorkspace ws;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = schedule_value(cfg.lr, epoch);
    // Fisher-Yates shuffle from the run generator.
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.u64() % static_cast<uint64_t>(i + 1));
      std::swap(order[i], order[j]);
    }
    double epoch_sse = 0.0;
    int batch_index = 0;
    for (int start = 0; start < n; start += batch, ++batch_index) {
      const int bsz = std::min(batch, n - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_sse = 0.0;
      for (int k = 0; k < bsz; ++k) {
        const int idx = order[start + k];
        std::copy(Xs.row(idx), Xs.row(idx) + d, x.begin());
        const double pred = forward_record(res.net, x, ws);
        const double resid = pred - ys[idx];
        batch_sse += resid * resid;
        param_gradients_ws(res.net, x, ws, 2.0 * resid / bsz, grad);
      }
      epoch_sse += batch_sse;
      const double batch_mse = batch_sse / bsz;
      if (!std::isfinite(batch_mse) || batch_mse > kDivergenceCap) {
        res.diverged = true;
        res.diverged_epoch = epoch;
        res.diverged_batch = batch_index;
        res.final_mse = unit * batch_mse;
        return res;
      }
      opt.step(res.net, grad, lr);
    }
    res.trace.push_back({epoch, unit * epoch_sse / n, lr, 0.0});
  }
  res.final_mse = unit * mse_on(res.net, Xs, ys);
  return res;
}

}  // namespace hycnn
