#include "dgnn/tape.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "dgnn/errors.hpp"

namespace dgnn {

namespace {

std::string shape_str(const Tensor& t) {
  return "[" + std::to_string(t.rows()) + " x " + std::to_string(t.cols()) + "]";
}

}  // namespace

Var Tape::push(Tensor value, std::function<void(Tape&, std::size_t)> backprop) {
  Node n;
  n.value = std::move(value);
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

std::vector<double>& Tape::grad_buf(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.size() != n.value.size()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

Var Tape::leaf(Tensor& tensor) {
  Var v = push(tensor, nullptr);
  Node& n = nodes_[v.id];
  n.external = &tensor;
  if (tensor.requires_grad()) {
    n.backprop = [](Tape& t, std::size_t self) {
      Node& me = t.nodes_[self];
      std::vector<double>& out = me.external->grad();
      const std::vector<double>& g = t.grad_buf(self);
      for (std::size_t i = 0; i < g.size(); ++i) out[i] += g[i];
    };
  }
  return v;
}

Var Tape::constant(Tensor value) { return push(std::move(value), nullptr); }

Var Tape::matmul(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (ta.cols() != tb.rows()) {
    throw ShapeError("matmul: " + shape_str(ta) + " x " + shape_str(tb));
  }
  const std::size_t p = ta.rows(), q = ta.cols(), r = tb.cols();
  Tensor out(p, r);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t k = 0; k < q; ++k) {
      const double aik = ta.at(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < r; ++j) {
        out.at(i, j) += aik * tb.at(k, j);
      }
    }
  }
  return push(std::move(out), [a, b, p, q, r](Tape& t, std::size_t self) {
    const std::vector<double>& g = t.grad_buf(self);
    const Tensor& va = t.value(a);
    const Tensor& vb = t.value(b);
    std::vector<double>& ga = t.grad_buf(a.id);
    std::vector<double>& gb = t.grad_buf(b.id);
    // dA = G * B^T, dB = A^T * G
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < r; ++j) {
        const double gij = g[i * r + j];
        if (gij == 0.0) continue;
        for (std::size_t k = 0; k < q; ++k) {
          ga[i * q + k] += gij * vb.at(k, j);
          gb[k * r + j] += va.at(i, k) * gij;
        }
      }
    }
  });
}

Var Tape::add(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!ta.same_shape(tb)) {
    throw ShapeError("add: " + shape_str(ta) + " vs " + shape_str(tb));
  }
  Tensor out = ta;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += tb[i];
  return push(std::move(out), [a, b](Tape& t, std::size_t self) {
    const std::vector<double>& g = t.grad_buf(self);
    std::vector<double>& ga = t.grad_buf(a.id);
    std::vector<double>& gb = t.grad_buf(b.id);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
      gb[i] += g[i];
    }
  });
}

Var Tape::add_n(const std::vector<Var>& terms) {
  if (terms.empty()) throw UsageError("add_n: empty term list");
  Tensor out = value(terms[0]);
  for (std::size_t t = 1; t < terms.size(); ++t) {
    const Tensor& tt = value(terms[t]);
    if (!tt.same_shape(out)) {
      throw ShapeError("add_n: " + shape_str(out) + " vs " + shape_str(tt));
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += tt[i];
  }
  return push(std::move(out), [terms](Tape& t, std::size_t self) {
    const std::vector<double>& g = t.grad_buf(self);
    for (Var term : terms) {
      std::vector<double>& gt = t.grad_buf(term.id);
      for (std::size_t i = 0; i < g.size(); ++i) gt[i] += g[i];
    }
  });
}

Var Tape::add_row_broadcast(Var a, Var bias) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(bias);
  if (tb.rows() != 1 || tb.cols() != ta.cols()) {
    throw ShapeError("add_row_broadcast: " + shape_str(ta) + " + " + shape_str(tb));
  }
  Tensor out = ta;
  for (std::size_t i = 0; i < ta.rows(); ++i) {
    for (std::size_t j = 0; j < ta.cols(); ++j) out.at(i, j) += tb[j];
  }
  const std::size_t rows = ta.rows(), cols = ta.cols();
  return push(std::move(out), [a, bias, rows, cols](Tape& t, std::size_t self) {
    const std::vector<double>& g = t.grad_buf(self);
    std::vector<double>& ga = t.grad_buf(a.id);
    std::vector<double>& gb = t.grad_buf(bias.id);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        ga[i * cols + j] += g[i * cols + j];
        gb[j] += g[i * cols + j];
      }
    }
  });
}

Var Tape::relu(Var a) {
  Tensor out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] < 0.0) out[i] = 0.0;
  }
  return push(std::move(out), [a](Tape& t, std::size_t self) {
    const std::vector<double>& g = t.grad_buf(self);
    const Tensor& va = t.value(a);
    std::vector<double>& ga = t.grad_buf(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (va[i] > 0.0) ga[i] += g[i];
    }
  });
}

Var Tape::row_softmax(Var a) {
  const Tensor& ta = value(a);
  Tensor out(ta.rows(), ta.cols());
  for (std::size_t i = 0; i < ta.rows(); ++i) {
    double mx = ta.at(i, 0);
    for (std::size_t j = 1; j < ta.cols(); ++j) mx = std::max(mx, ta.at(i, j));
    double denom = 0.0;
    for (std::size_t j = 0; j < ta.cols(); ++j) {
      out.at(i, j) = std::exp(ta.at(i, j) - mx);
      denom += out.at(i, j);
    }
    for (std::size_t j = 0; j < ta.cols(); ++j) out.at(i, j) /= denom;
  }
  return push(std::move(out), [a](Tape& t, std::size_t self) {
    const Tensor& s = t.value(Var{self});
    const std::vector<double>& g = t.grad_buf(self);
    std::vector<double>& ga = t.grad_buf(a.id);
    const std::size_t cols = s.cols();
    for (std::size_t i = 0; i < s.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j) dot += g[i * cols + j] * s.at(i, j);
      for (std::size_t j = 0; j < cols; ++j) {
        ga[i * cols + j] += s.at(i, j) * (g[i * cols + j] - dot);
      }
    }
  });
}

Var Tape::log(Var a) {
  Tensor out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::log(std::max(out[i], kLogClamp));
  }
  return push(std::move(out), [a](Tape& t, std::size_t self) {
    const std::vector<double>& g = t.grad_buf(self);
    const Tensor& va = t.value(a);
    std::vector<double>& ga = t.grad_buf(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (va[i] > kLogClamp) ga[i] += g[i] / va[i];
    }
  });
}

Var Tape::sum(Var a) {
  const Tensor& ta = value(a);
  double total = 0.0;
  for (std::size_t i = 0; i < ta.size(); ++i) total += ta[i];
  return push(Tensor::scalar(total), [a](Tape& t, std::size_t self) {
    const double g = t.grad_buf(self)[0];
    std::vector<double>& ga = t.grad_buf(a.id);
    for (double& x : ga) x += g;
  });
}

Var Tape::sum_rows(Var a) {
  const Tensor& ta = value(a);
  Tensor out(1, ta.cols());
  for (std::size_t i = 0; i < ta.rows(); ++i) {
    for (std::size_t j = 0; j < ta.cols(); ++j) out[j] += ta.at(i, j);
  }
  const std::size_t rows = ta.rows(), cols = ta.cols();
  return push(std::move(out), [a, rows, cols](Tape& t, std::size_t self) {
    const std::vector<double>& g = t.grad_buf(self);
    std::vector<double>& ga = t.grad_buf(a.id);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) ga[i * cols + j] += g[j];
    }
  });
}

Var Tape::index_select(Var a, std::vector<std::size_t> rows) {
  const Tensor& ta = value(a);
  for (std::size_t r : rows) {
    if (r >= ta.rows()) throw ShapeError("index_select: row out of range");
  }
  Tensor out(rows.size(), ta.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < ta.cols(); ++j) out.at(i, j) = ta.at(rows[i], j);
  }
  const std::size_t cols = ta.cols();
  return push(std::move(out), [a, rows = std::move(rows), cols](Tape& t, std::size_t self) {
    const std::vector<double>& g = t.grad_buf(self);
    std::vector<double>& ga = t.grad_buf(a.id);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < cols; ++j) ga[rows[i] * cols + j] += g[i * cols + j];
    }
  });
}

Var Tape::scale(Var a, double factor) {
  Tensor out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= factor;
  return push(std::move(out), [a, factor](Tape& t, std::size_t self) {
    const std::vector<double>& g = t.grad_buf(self);
    std::vector<double>& ga = t.grad_buf(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
  });
}

Var Tape::scale_by_one_plus(Var a, Var s) {
  const Tensor& ts = value(s);
  if (ts.size() != 1) throw ShapeError("scale_by_one_plus: s must be [1 x 1]");
  const double factor = 1.0 + ts[0];
  Tensor out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= factor;
  return push(std::move(out), [a, s, factor](Tape& t, std::size_t self) {
    const std::vector<double>& g = t.grad_buf(self);
    const Tensor& va = t.value(a);
    std::vector<double>& ga = t.grad_buf(a.id);
    std::vector<double>& gs = t.grad_buf(s.id);
    double acc = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += factor * g[i];
      acc += g[i] * va[i];
    }
    gs[0] += acc;
  });
}

Var Tape::neighbor_sum(Var h, const std::vector<std::vector<std::uint32_t>>& neighbors) {
  const Tensor& th = value(h);
  if (th.rows() != neighbors.size()) {
    throw ShapeError("neighbor_sum: feature rows " + std::to_string(th.rows()) +
                     " vs " + std::to_string(neighbors.size()) + " vertices");
  }
  const std::size_t cols = th.cols();
  Tensor out(th.rows(), cols);
  for (std::size_t v = 0; v < neighbors.size(); ++v) {
    for (std::uint32_t u : neighbors[v]) {
      for (std::size_t j = 0; j < cols; ++j) out.at(v, j) += th.at(u, j);
    }
  }
  const auto* nbrs = &neighbors;
  return push(std::move(out), [h, nbrs, cols](Tape& t, std::size_t self) {
    const std::vector<double>& g = t.grad_buf(self);
    std::vector<double>& gh = t.grad_buf(h.id);
    for (std::size_t v = 0; v < nbrs->size(); ++v) {
      for (std::uint32_t u : (*nbrs)[v]) {
        for (std::size_t j = 0; j < cols; ++j) gh[u * cols + j] += g[v * cols + j];
      }
    }
  });
}

Var Tape::column_norm(Var x, Var gamma, Var beta, double eps, std::vector<double>* batch_mean,
                      std::vector<double>* batch_var) {
  const Tensor& tx = value(x);
  const Tensor& tg = value(gamma);
  const Tensor& tb = value(beta);
  const std::size_t rows = tx.rows(), cols = tx.cols();
  if (tg.rows() != 1 || tg.cols() != cols || tb.rows() != 1 || tb.cols() != cols) {
    throw ShapeError("column_norm: gamma/beta must be [1 x " + std::to_string(cols) + "]");
  }
  std::vector<double> scale(cols);  // 1 / sqrt(var + eps)
  std::vector<double> standardized(rows * cols);
  if (batch_mean) batch_mean->resize(cols);
  if (batch_var) batch_var->resize(cols);
  Tensor out(rows, cols);
  for (std::size_t c = 0; c < cols; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < rows; ++r) mean += tx.at(r, c);
    mean /= static_cast<double>(rows);
    double var = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const double d = tx.at(r, c) - mean;
      var += d * d;
    }
    var /= static_cast<double>(rows);
    if (batch_mean) (*batch_mean)[c] = mean;
    if (batch_var) (*batch_var)[c] = var;
    scale[c] = 1.0 / std::sqrt(var + eps);
    for (std::size_t r = 0; r < rows; ++r) {
      const double y = (tx.at(r, c) - mean) * scale[c];
      standardized[r * cols + c] = y;
      out.at(r, c) = tg[c] * y + tb[c];
    }
  }
  return push(std::move(out), [x, gamma, beta, rows, cols, scale = std::move(scale),
                               standardized = std::move(standardized)](Tape& t,
                                                                       std::size_t self) {
    const std::vector<double>& g = t.grad_buf(self);
    const Tensor& tg = t.value(gamma);
    std::vector<double>& gx = t.grad_buf(x.id);
    std::vector<double>& gg = t.grad_buf(gamma.id);
    std::vector<double>& gb = t.grad_buf(beta.id);
    const double inv_rows = 1.0 / static_cast<double>(rows);
    for (std::size_t c = 0; c < cols; ++c) {
      double sum_g = 0.0, sum_gy = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        const double gi = g[r * cols + c];
        sum_g += gi;
        sum_gy += gi * standardized[r * cols + c];
      }
      gb[c] += sum_g;
      gg[c] += sum_gy;
      const double mean_g = sum_g * inv_rows;
      const double mean_gy = sum_gy * inv_rows;
      for (std::size_t r = 0; r < rows; ++r) {
        gx[r * cols + c] += tg[c] * scale[c] *
                            (g[r * cols + c] - mean_g - standardized[r * cols + c] * mean_gy);
      }
    }
  });
}

Var Tape::column_norm_fixed(Var x, Var gamma, Var beta, const std::vector<double>& mean,
                            const std::vector<double>& var, double eps) {
  const Tensor& tx = value(x);
  const Tensor& tg = value(gamma);
  const Tensor& tb = value(beta);
  const std::size_t rows = tx.rows(), cols = tx.cols();
  if (tg.rows() != 1 || tg.cols() != cols || tb.rows() != 1 || tb.cols() != cols ||
      mean.size() != cols || var.size() != cols) {
    throw ShapeError("column_norm_fixed: statistics must be [1 x " + std::to_string(cols) + "]");
  }
  std::vector<double> scale(cols);
  std::vector<double> standardized(rows * cols);
  Tensor out(rows, cols);
  for (std::size_t c = 0; c < cols; ++c) {
    scale[c] = 1.0 / std::sqrt(var[c] + eps);
    for (std::size_t r = 0; r < rows; ++r) {
      const double y = (tx.at(r, c) - mean[c]) * scale[c];
      standardized[r * cols + c] = y;
      out.at(r, c) = tg[c] * y + tb[c];
    }
  }
  return push(std::move(out), [x, gamma, beta, rows, cols, scale = std::move(scale),
                               standardized = std::move(standardized)](Tape& t,
                                                                       std::size_t self) {
    const std::vector<double>& g = t.grad_buf(self);
    const Tensor& tg = t.value(gamma);
    std::vector<double>& gx = t.grad_buf(x.id);
    std::vector<double>& gg = t.grad_buf(gamma.id);
    std::vector<double>& gb = t.grad_buf(beta.id);
    for (std::size_t c = 0; c < cols; ++c) {
      for (std::size_t r = 0; r < rows; ++r) {
        const double gi = g[r * cols + c];
        gb[c] += gi;
        gg[c] += gi * standardized[r * cols + c];
        gx[r * cols + c] += tg[c] * scale[c] * gi;
      }
    }
  });
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw UsageError("concat_cols: empty part list");
  std::size_t total = 0;
  for (Var p : parts) {
    const Tensor& tp = value(p);
    if (tp.rows() != 1) throw ShapeError("concat_cols: parts must be row vectors");
    total += tp.cols();
  }
  Tensor out(1, total);
  std::size_t off = 0;
  for (Var p : parts) {
    const Tensor& tp = value(p);
    for (std::size_t j = 0; j < tp.cols(); ++j) out[off + j] = tp[j];
    off += tp.cols();
  }
  return push(std::move(out), [parts](Tape& t, std::size_t self) {
    const std::vector<double>& g = t.grad_buf(self);
    std::size_t off = 0;
    for (Var p : parts) {
      std::vector<double>& gp = t.grad_buf(p.id);
      for (std::size_t j = 0; j < gp.size(); ++j) gp[j] += g[off + j];
      off += gp.size();
    }
  });
}

Var Tape::weighted_sum(Var v, std::vector<double> weights) {
  const Tensor& tv = value(v);
  if (tv.rows() != 1 || tv.cols() != weights.size()) {
    throw ShapeError("weighted_sum: " + shape_str(tv) + " with " +
                     std::to_string(weights.size()) + " weights");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) total += weights[j] * tv[j];
  return push(Tensor::scalar(total), [v, weights = std::move(weights)](Tape& t, std::size_t self) {
    const double g = t.grad_buf(self)[0];
    std::vector<double>& gv = t.grad_buf(v.id);
    for (std::size_t j = 0; j < weights.size(); ++j) gv[j] += g * weights[j];
  });
}

void Tape::backward(Var loss) {
  const Tensor& tl = value(loss);
  if (tl.rows() != 1 || tl.cols() != 1) {
    throw UsageError("backward: loss node must be [1 x 1], got " + shape_str(tl));
  }
  for (Node& n : nodes_) {
    n.grad.assign(n.value.size(), 0.0);
  }
  nodes_[loss.id].grad[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backprop) n.backprop(*this, i);
  }
}

}  // namespace dgnn
