#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "lodgepp/core/error.hpp"
#include "lodgepp/core/types.hpp"

namespace lodgepp::nn {

// Reverse-mode autodiff over dense matrices. A Graph is a single-use tape:
// build the forward computation, call backward(loss) once, read parameter
// gradients from the Param structs. Not thread-safe; training is
// single-writer by design.

struct Param {
  Mat value;
  Mat grad;

  explicit Param(Mat v) : value(std::move(v)) {
    grad = Mat::Zero(value.rows(), value.cols());
  }
  Param() = default;

  void zero_grad() { grad.setZero(); }
  Eigen::Index size() const { return value.size(); }
};

class Graph;

struct Var {
  int id = -1;
};

class Graph {
 public:
  Var constant(Mat v) { return push(std::move(v), false); }

  Var param(Param& p) {
    Var v = push(p.value, true);
    param_links_.emplace_back(v.id, &p);
    return v;
  }

  const Mat& value(Var v) const { return nodes_[static_cast<size_t>(v.id)].value; }
  const Mat& grad(Var v) const { return nodes_[static_cast<size_t>(v.id)].grad; }

  // Backpropagates from a 1x1 loss node and accumulates into Param::grad.
  void backward(Var loss) {
    Node& l = node(loss);
    if (l.value.rows() != 1 || l.value.cols() != 1)
      throw ShapeMismatch("backward expects a scalar loss node");
    for (auto& n : nodes_) n.grad.setZero();
    l.grad(0, 0) = 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
      Node& n = nodes_[static_cast<size_t>(i)];
      if (n.backward && n.needs_grad) n.backward(*this);
    }
    for (auto& [id, p] : param_links_)
      p->grad += nodes_[static_cast<size_t>(id)].grad;
  }

  size_t size() const { return nodes_.size(); }

  // --- primitive ops -------------------------------------------------------

  Var add(Var a, Var b) {
    check_same_shape(a, b, "add");
    Var out = push(value(a) + value(b), needs(a) || needs(b));
    set_backward(out, [this, a, b, out](Graph&) {
      accumulate(a, node(out).grad);
      accumulate(b, node(out).grad);
    });
    return out;
  }

  Var sub(Var a, Var b) {
    check_same_shape(a, b, "sub");
    Var out = push(value(a) - value(b), needs(a) || needs(b));
    set_backward(out, [this, a, b, out](Graph&) {
      accumulate(a, node(out).grad);
      accumulate(b, -node(out).grad);
    });
    return out;
  }

  Var mul(Var a, Var b) {
    check_same_shape(a, b, "mul");
    Var out = push(value(a).cwiseProduct(value(b)), needs(a) || needs(b));
    set_backward(out, [this, a, b, out](Graph&) {
      accumulate(a, node(out).grad.cwiseProduct(value(b)));
      accumulate(b, node(out).grad.cwiseProduct(value(a)));
    });
    return out;
  }

  Var scale(Var a, double c) {
    Var out = push(value(a) * c, needs(a));
    set_backward(out, [this, a, c, out](Graph&) {
      accumulate(a, node(out).grad * c);
    });
    return out;
  }

  Var matmul(Var a, Var b) {
    if (value(a).cols() != value(b).rows())
      throw ShapeMismatch("matmul inner dimensions disagree");
    Var out = push(value(a) * value(b), needs(a) || needs(b));
    set_backward(out, [this, a, b, out](Graph&) {
      accumulate(a, node(out).grad * value(b).transpose());
      accumulate(b, value(a).transpose() * node(out).grad);
    });
    return out;
  }

  Var transpose(Var a) {
    Var out = push(value(a).transpose(), needs(a));
    set_backward(out, [this, a, out](Graph&) {
      accumulate(a, node(out).grad.transpose());
    });
    return out;
  }

  // A + broadcast of a 1 x n row over every row of A.
  Var add_row_broadcast(Var a, Var row) {
    if (value(row).rows() != 1 || value(row).cols() != value(a).cols())
      throw ShapeMismatch("add_row_broadcast expects a 1 x cols row");
    Mat v = value(a);
    v.rowwise() += Eigen::RowVectorXd(value(row).row(0));
    Var out = push(std::move(v), needs(a) || needs(row));
    set_backward(out, [this, a, row, out](Graph&) {
      accumulate(a, node(out).grad);
      accumulate(row, node(out).grad.colwise().sum());
    });
    return out;
  }

  Var mul_row_broadcast(Var a, Var row) {
    if (value(row).rows() != 1 || value(row).cols() != value(a).cols())
      throw ShapeMismatch("mul_row_broadcast expects a 1 x cols row");
    Mat v = value(a);
    v.array().rowwise() *= value(row).row(0).array();
    Var out = push(std::move(v), needs(a) || needs(row));
    set_backward(out, [this, a, row, out](Graph&) {
      Mat g = node(out).grad;
      Mat ga = g;
      ga.array().rowwise() *= value(row).row(0).array();
      accumulate(a, ga);
      accumulate(row, g.cwiseProduct(value(a)).colwise().sum());
    });
    return out;
  }

  Var relu(Var a) {
    Var out = push(value(a).cwiseMax(0.0), needs(a));
    set_backward(out, [this, a, out](Graph&) {
      Mat mask = (value(a).array() > 0.0).cast<double>();
      accumulate(a, node(out).grad.cwiseProduct(mask));
    });
    return out;
  }

  Var gelu(Var a) {
    constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
    constexpr double q = 0.044715;
    const Mat& x = value(a);
    Mat u = c * (x.array() + q * x.array().cube()).matrix();
    Mat t = u.array().tanh().matrix();
    Mat y = 0.5 * x.cwiseProduct((t.array() + 1.0).matrix());
    Var out = push(std::move(y), needs(a));
    set_backward(out, [this, a, out, t, c, q](Graph&) {
      const Mat& x2 = value(a);
      Mat sech2 = (1.0 - t.array().square()).matrix();
      Mat du = c * (1.0 + 3.0 * q * x2.array().square()).matrix();
      Mat dy = (0.5 * (t.array() + 1.0) +
                0.5 * x2.array() * sech2.array() * du.array())
                   .matrix();
      accumulate(a, node(out).grad.cwiseProduct(dy));
    });
    return out;
  }

  Var sigmoid(Var a) {
    Mat s = (1.0 / (1.0 + (-value(a).array()).exp())).matrix();
    Var out = push(s, needs(a));
    set_backward(out, [this, a, out, s](Graph&) {
      Mat ds = s.array() * (1.0 - s.array());
      accumulate(a, node(out).grad.cwiseProduct(ds.matrix()));
    });
    return out;
  }

  Var softmax_rows(Var a) {
    Mat v = value(a);
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      Eigen::RowVectorXd r = v.row(i);
      double m = r.maxCoeff();
      Eigen::RowVectorXd e = (r.array() - m).exp();
      v.row(i) = e / e.sum();
    }
    Var out = push(v, needs(a));
    set_backward(out, [this, a, out](Graph&) {
      const Mat& s = node(out).value;
      const Mat& g = node(out).grad;
      Mat da(s.rows(), s.cols());
      for (Eigen::Index i = 0; i < s.rows(); ++i) {
        double dot = g.row(i).cwiseProduct(s.row(i)).sum();
        da.row(i) = s.row(i).array() * (g.row(i).array() - dot);
      }
      accumulate(a, da);
    });
    return out;
  }

  Var layernorm_rows(Var a, double eps = 1e-5) {
    const Mat& x = value(a);
    const double n = static_cast<double>(x.cols());
    Mat y(x.rows(), x.cols());
    Vec sigma(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double mu = x.row(i).mean();
      double var = (x.row(i).array() - mu).square().sum() / n;
      sigma(i) = std::sqrt(var + eps);
      y.row(i) = (x.row(i).array() - mu) / sigma(i);
    }
    Var out = push(y, needs(a));
    set_backward(out, [this, a, out, sigma, n](Graph&) {
      const Mat& yv = node(out).value;
      const Mat& g = node(out).grad;
      Mat da(yv.rows(), yv.cols());
      for (Eigen::Index i = 0; i < yv.rows(); ++i) {
        double gm = g.row(i).mean();
        double gym = g.row(i).cwiseProduct(yv.row(i)).sum() / n;
        da.row(i) =
            (g.row(i).array() - gm - yv.row(i).array() * gym) / sigma(i);
      }
      accumulate(a, da);
    });
    return out;
  }

  Var mean_all(Var a) {
    double n = static_cast<double>(value(a).size());
    Mat v(1, 1);
    v(0, 0) = value(a).sum() / n;
    Var out = push(std::move(v), needs(a));
    set_backward(out, [this, a, out, n](Graph&) {
      accumulate(a, Mat::Constant(value(a).rows(), value(a).cols(),
                                  node(out).grad(0, 0) / n));
    });
    return out;
  }

  Var sum_all(Var a) {
    Mat v(1, 1);
    v(0, 0) = value(a).sum();
    Var out = push(std::move(v), needs(a));
    set_backward(out, [this, a, out](Graph&) {
      accumulate(a, Mat::Constant(value(a).rows(), value(a).cols(),
                                  node(out).grad(0, 0)));
    });
    return out;
  }

  Var mse(Var a, Var b) {
    check_same_shape(a, b, "mse");
    Mat diff = value(a) - value(b);
    double n = static_cast<double>(diff.size());
    Mat v(1, 1);
    v(0, 0) = diff.squaredNorm() / n;
    Var out = push(std::move(v), needs(a) || needs(b));
    set_backward(out, [this, a, b, out, diff, n](Graph&) {
      Mat d = (2.0 / n) * node(out).grad(0, 0) * diff;
      accumulate(a, d);
      accumulate(b, -d);
    });
    return out;
  }

  // Mean negative log-likelihood of integer targets under row-wise softmax.
  Var cross_entropy_rows(Var logits, const std::vector<int>& targets) {
    const Mat& x = value(logits);
    if (static_cast<size_t>(x.rows()) != targets.size())
      throw ShapeMismatch("one target per logits row required");
    const double n = static_cast<double>(targets.size());
    Mat probs(x.rows(), x.cols());
    double loss = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double m = x.row(i).maxCoeff();
      Eigen::RowVectorXd e = (x.row(i).array() - m).exp();
      double z = e.sum();
      probs.row(i) = e / z;
      loss -= x(i, targets[static_cast<size_t>(i)]) - m - std::log(z);
    }
    Mat v(1, 1);
    v(0, 0) = loss / n;
    Var out = push(std::move(v), needs(logits));
    set_backward(out, [this, logits, out, probs, targets, n](Graph&) {
      Mat d = probs;
      for (Eigen::Index i = 0; i < d.rows(); ++i)
        d(i, targets[static_cast<size_t>(i)]) -= 1.0;
      accumulate(logits, node(out).grad(0, 0) / n * d);
    });
    return out;
  }

  Var slice_cols(Var a, Eigen::Index c0, Eigen::Index n) {
    Var out = push(value(a).middleCols(c0, n), needs(a));
    set_backward(out, [this, a, out, c0, n](Graph&) {
      Mat d = Mat::Zero(value(a).rows(), value(a).cols());
      d.middleCols(c0, n) = node(out).grad;
      accumulate(a, d);
    });
    return out;
  }

  Var slice_rows(Var a, Eigen::Index r0, Eigen::Index n) {
    Var out = push(value(a).middleRows(r0, n), needs(a));
    set_backward(out, [this, a, out, r0, n](Graph&) {
      Mat d = Mat::Zero(value(a).rows(), value(a).cols());
      d.middleRows(r0, n) = node(out).grad;
      accumulate(a, d);
    });
    return out;
  }

  Var concat_cols(const std::vector<Var>& parts) {
    Eigen::Index rows = value(parts.at(0)).rows();
    Eigen::Index cols = 0;
    bool any = false;
    for (Var p : parts) {
      if (value(p).rows() != rows)
        throw ShapeMismatch("concat_cols row counts disagree");
      cols += value(p).cols();
      any = any || needs(p);
    }
    Mat v(rows, cols);
    Eigen::Index at = 0;
    for (Var p : parts) {
      v.middleCols(at, value(p).cols()) = value(p);
      at += value(p).cols();
    }
    Var out = push(std::move(v), any);
    set_backward(out, [this, parts, out](Graph&) {
      Eigen::Index at2 = 0;
      for (Var p : parts) {
        accumulate(p, node(out).grad.middleCols(at2, value(p).cols()));
        at2 += value(p).cols();
      }
    });
    return out;
  }

  Var concat_rows(const std::vector<Var>& parts) {
    Eigen::Index cols = value(parts.at(0)).cols();
    Eigen::Index rows = 0;
    bool any = false;
    for (Var p : parts) {
      if (value(p).cols() != cols)
        throw ShapeMismatch("concat_rows column counts disagree");
      rows += value(p).rows();
      any = any || needs(p);
    }
    Mat v(rows, cols);
    Eigen::Index at = 0;
    for (Var p : parts) {
      v.middleRows(at, value(p).rows()) = value(p);
      at += value(p).rows();
    }
    Var out = push(std::move(v), any);
    set_backward(out, [this, parts, out](Graph&) {
      Eigen::Index at2 = 0;
      for (Var p : parts) {
        accumulate(p, node(out).grad.middleRows(at2, value(p).rows()));
        at2 += value(p).rows();
      }
    });
    return out;
  }

  Var gather_rows(Var table, const std::vector<int>& ids) {
    const Mat& t = value(table);
    Mat v(static_cast<Eigen::Index>(ids.size()), t.cols());
    for (size_t i = 0; i < ids.size(); ++i)
      v.row(static_cast<Eigen::Index>(i)) = t.row(ids[i]);
    Var out = push(std::move(v), needs(table));
    set_backward(out, [this, table, out, ids](Graph&) {
      Mat d = Mat::Zero(value(table).rows(), value(table).cols());
      for (size_t i = 0; i < ids.size(); ++i)
        d.row(ids[i]) += node(out).grad.row(static_cast<Eigen::Index>(i));
      accumulate(table, d);
    });
    return out;
  }

  Var sqrt_elem(Var a) {
    Mat y = value(a).array().sqrt().matrix();
    Var out = push(y, needs(a));
    set_backward(out, [this, a, out, y](Graph&) {
      accumulate(a, (node(out).grad.array() * 0.5 / y.array()).matrix());
    });
    return out;
  }

  // a * s where s is a 1x1 node.
  Var scale_by_scalar(Var a, Var s) {
    if (value(s).size() != 1) throw ShapeMismatch("scalar node must be 1x1");
    Var out = push(value(a) * value(s)(0, 0), needs(a) || needs(s));
    set_backward(out, [this, a, s, out](Graph&) {
      accumulate(a, node(out).grad * value(s)(0, 0));
      Mat ds(1, 1);
      ds(0, 0) = node(out).grad.cwiseProduct(value(a)).sum();
      accumulate(s, ds);
    });
    return out;
  }

  Var inv_scalar(Var s) {
    if (value(s).size() != 1) throw ShapeMismatch("scalar node must be 1x1");
    Mat v(1, 1);
    v(0, 0) = 1.0 / value(s)(0, 0);
    Var out = push(std::move(v), needs(s));
    set_backward(out, [this, s, out](Graph&) {
      double x = value(s)(0, 0);
      Mat d(1, 1);
      d(0, 0) = -node(out).grad(0, 0) / (x * x);
      accumulate(s, d);
    });
    return out;
  }

  // Sum of elementwise products, any matching shapes; 1x1 result.
  Var dot(Var a, Var b) {
    check_same_shape(a, b, "dot");
    Mat v(1, 1);
    v(0, 0) = value(a).cwiseProduct(value(b)).sum();
    Var out = push(std::move(v), needs(a) || needs(b));
    set_backward(out, [this, a, b, out](Graph&) {
      accumulate(a, node(out).grad(0, 0) * value(b));
      accumulate(b, node(out).grad(0, 0) * value(a));
    });
    return out;
  }

  // Cross product of two 3x1 vectors.
  Var cross3(Var a, Var b) {
    if (value(a).rows() != 3 || value(a).cols() != 1 || value(b).rows() != 3 ||
        value(b).cols() != 1)
      throw ShapeMismatch("cross3 expects 3x1 vectors");
    Vec3 av = value(a).col(0), bv = value(b).col(0);
    Var out = push(Mat(av.cross(bv)), needs(a) || needs(b));
    set_backward(out, [this, a, b, out, av, bv](Graph&) {
      Vec3 g = node(out).grad.col(0);
      accumulate(a, Mat(bv.cross(g)));
      accumulate(b, Mat(g.cross(av)));
    });
    return out;
  }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool needs_grad = false;
    std::function<void(Graph&)> backward;
  };

  Node& node(Var v) { return nodes_[static_cast<size_t>(v.id)]; }
  bool needs(Var v) const {
    return nodes_[static_cast<size_t>(v.id)].needs_grad;
  }

  Var push(Mat v, bool needs_grad) {
    Node n;
    n.grad = Mat::Zero(v.rows(), v.cols());
    n.value = std::move(v);
    n.needs_grad = needs_grad;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  void set_backward(Var v, std::function<void(Graph&)> fn) {
    if (node(v).needs_grad) node(v).backward = std::move(fn);
  }

  void accumulate(Var v, const Mat& g) {
    Node& n = node(v);
    if (n.needs_grad) n.grad += g;
  }

  void check_same_shape(Var a, Var b, const char* what) const {
    const Mat& av = nodes_[static_cast<size_t>(a.id)].value;
    const Mat& bv = nodes_[static_cast<size_t>(b.id)].value;
    if (av.rows() != bv.rows() || av.cols() != bv.cols())
      throw ShapeMismatch(std::string(what) + ": operand shapes disagree");
  }

  std::vector<Node> nodes_;
  std::vector<std::pair<int, Param*>> param_links_;
};

// Normalized 3x1 vector node.
inline Var normalize3(Graph& g, Var v) {
  Var n2 = g.dot(v, v);
  Var n = g.sqrt_elem(n2);
  return g.scale_by_scalar(v, g.inv_scalar(n));
}

}  // namespace lodgepp::nn
