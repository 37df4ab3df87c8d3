#include "agzsl/graph.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace agzsl::num {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw DimensionError(msg);
}

bool is_scalar(const Tensor& t) { return t.numel() == 1 && t.rank() == 0; }

}  // namespace

Tape::Node& Tape::node(Var v) { return nodes_[static_cast<std::size_t>(v.id)]; }
const Tape::Node& Tape::node(Var v) const { return nodes_[static_cast<std::size_t>(v.id)]; }

void Tape::check_finite(const Tensor& t, const char* op) const {
    if (!t.all_finite()) throw NumericError(std::string("non-finite result in op ") + op);
}

Tensor& Tape::grad_buf(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.numel() == 0 && n.value.numel() > 0) n.grad = Tensor::zeros(n.value.shape());
    return n.grad;
}

Var Tape::emit(Tensor value, std::vector<int> inputs,
               std::function<void(Tape&, const Node&)> backprop) {
    Node n;
    n.value = std::move(value);
    n.inputs = std::move(inputs);
    n.backprop = std::move(backprop);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Tensor value) {
    check_finite(value, "constant");
    return emit(std::move(value), {}, nullptr);
}

Var Tape::param(Tensor& p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) return Var{it->second};
    check_finite(p, "param");
    Var v = emit(p, {}, nullptr);
    param_nodes_[&p] = v.id;
    return v;
}

Var Tape::add(Var a, Var b) {
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    if (is_scalar(tb) || is_scalar(ta)) {
        const Tensor& big = is_scalar(tb) ? ta : tb;
        double s = (is_scalar(tb) ? tb : ta).item();
        Tensor out = big;
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] += s;
        int sid = (is_scalar(tb) ? b : a).id;
        int bid = (is_scalar(tb) ? a : b).id;
        return emit(std::move(out), {a.id, b.id}, [sid, bid](Tape& t, const Node& n) {
            Tensor& gb = t.grad_buf(bid);
            Tensor& gs = t.grad_buf(sid);
            for (std::size_t i = 0; i < n.grad.numel(); ++i) {
                gb[i] += n.grad[i];
                gs[0] += n.grad[i];
            }
        });
    }
    require(ta.same_shape(tb), "add: shape mismatch " + shape_str(ta.shape()) + " vs " + shape_str(tb.shape()));
    Tensor out = ta;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += tb[i];
    return emit(std::move(out), {a.id, b.id}, [a, b](Tape& t, const Node& n) {
        Tensor& ga = t.grad_buf(a.id);
        Tensor& gb = t.grad_buf(b.id);
        for (std::size_t i = 0; i < n.grad.numel(); ++i) {
            ga[i] += n.grad[i];
            gb[i] += n.grad[i];
        }
    });
}

Var Tape::sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var Tape::mul(Var a, Var b) {
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    if (is_scalar(ta) || is_scalar(tb)) {
        Var sv = is_scalar(tb) ? b : a;
        Var bv = is_scalar(tb) ? a : b;
        double s = node(sv).value.item();
        Tensor out = node(bv).value;
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= s;
        Tensor big = node(bv).value;
        return emit(std::move(out), {a.id, b.id}, [sv, bv, s, big](Tape& t, const Node& n) {
            Tensor& gb = t.grad_buf(bv.id);
            Tensor& gs = t.grad_buf(sv.id);
            for (std::size_t i = 0; i < n.grad.numel(); ++i) {
                gb[i] += s * n.grad[i];
                gs[0] += big[i] * n.grad[i];
            }
        });
    }
    require(ta.same_shape(tb), "mul: shape mismatch " + shape_str(ta.shape()) + " vs " + shape_str(tb.shape()));
    Tensor out = ta;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= tb[i];
    Tensor va = ta, vb = tb;
    return emit(std::move(out), {a.id, b.id}, [a, b, va, vb](Tape& t, const Node& n) {
        Tensor& ga = t.grad_buf(a.id);
        Tensor& gb = t.grad_buf(b.id);
        for (std::size_t i = 0; i < n.grad.numel(); ++i) {
            ga[i] += vb[i] * n.grad[i];
            gb[i] += va[i] * n.grad[i];
        }
    });
}

Var Tape::scale(Var a, double c) {
    Tensor out = node(a).value;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= c;
    check_finite(out, "scale");
    return emit(std::move(out), {a.id}, [a, c](Tape& t, const Node& n) {
        Tensor& ga = t.grad_buf(a.id);
        for (std::size_t i = 0; i < n.grad.numel(); ++i) ga[i] += c * n.grad[i];
    });
}

Var Tape::tanh_(Var a) {
    Tensor out = node(a).value;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(out[i]);
    Tensor saved = out;
    return emit(std::move(out), {a.id}, [a, saved](Tape& t, const Node& n) {
        Tensor& ga = t.grad_buf(a.id);
        for (std::size_t i = 0; i < n.grad.numel(); ++i)
            ga[i] += (1.0 - saved[i] * saved[i]) * n.grad[i];
    });
}

Var Tape::relu_(Var a) {
    Tensor in = node(a).value;
    Tensor out = in;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
    return emit(std::move(out), {a.id}, [a, in](Tape& t, const Node& n) {
        Tensor& ga = t.grad_buf(a.id);
        // subgradient convention: g(0) = 0
        for (std::size_t i = 0; i < n.grad.numel(); ++i)
            ga[i] += (in[i] > 0.0 ? n.grad[i] : 0.0);
    });
}

Var Tape::sigmoid_(Var a) {
    Tensor out = node(a).value;
    for (std::size_t i = 0; i < out.numel(); ++i) {
        double x = out[i];
        out[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    }
    Tensor saved = out;
    return emit(std::move(out), {a.id}, [a, saved](Tape& t, const Node& n) {
        Tensor& ga = t.grad_buf(a.id);
        for (std::size_t i = 0; i < n.grad.numel(); ++i)
            ga[i] += saved[i] * (1.0 - saved[i]) * n.grad[i];
    });
}

Var Tape::exp_(Var a) {
    Tensor out = node(a).value;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::exp(out[i]);
    check_finite(out, "exp");
    Tensor saved = out;
    return emit(std::move(out), {a.id}, [a, saved](Tape& t, const Node& n) {
        Tensor& ga = t.grad_buf(a.id);
        for (std::size_t i = 0; i < n.grad.numel(); ++i) ga[i] += saved[i] * n.grad[i];
    });
}

Var Tape::log_(Var a) {
    Tensor in = node(a).value;
    Tensor out = in;
    for (std::size_t i = 0; i < out.numel(); ++i) {
        if (in[i] <= 0.0) throw NumericError("log of non-positive value");
        out[i] = std::log(in[i]);
    }
    return emit(std::move(out), {a.id}, [a, in](Tape& t, const Node& n) {
        Tensor& ga = t.grad_buf(a.id);
        for (std::size_t i = 0; i < n.grad.numel(); ++i) ga[i] += n.grad[i] / in[i];
    });
}

Var Tape::sqrt_(Var a) {
    Tensor in = node(a).value;
    Tensor out = in;
    for (std::size_t i = 0; i < out.numel(); ++i) {
        if (in[i] < 0.0) throw NumericError("sqrt of negative value");
        out[i] = std::sqrt(in[i]);
    }
    Tensor saved = out;
    return emit(std::move(out), {a.id}, [a, saved](Tape& t, const Node& n) {
        Tensor& ga = t.grad_buf(a.id);
        for (std::size_t i = 0; i < n.grad.numel(); ++i)
            ga[i] += 0.5 / saved[i] * n.grad[i];
    });
}

Var Tape::softplus_(Var a) {
    Tensor in = node(a).value;
    Tensor out = in;
    for (std::size_t i = 0; i < out.numel(); ++i) {
        double x = in[i];
        out[i] = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    }
    return emit(std::move(out), {a.id}, [a, in](Tape& t, const Node& n) {
        Tensor& ga = t.grad_buf(a.id);
        for (std::size_t i = 0; i < n.grad.numel(); ++i) {
            double x = in[i];
            double s = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
            ga[i] += s * n.grad[i];
        }
    });
}

Var Tape::matmul(Var a, Var b) {
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    require(ta.rank() == 2 && tb.rank() == 2, "matmul: operands must be 2-D");
    require(ta.extent(1) == tb.extent(0), "matmul: inner extents differ, " +
            shape_str(ta.shape()) + " x " + shape_str(tb.shape()));
    std::size_t r = ta.extent(0), k = ta.extent(1), c = tb.extent(1);
    Tensor out({r, c});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t l = 0; l < k; ++l) {
            double v = ta.at(i, l);
            for (std::size_t j = 0; j < c; ++j) out.at(i, j) += v * tb.at(l, j);
        }
    check_finite(out, "matmul");
    Tensor va = ta, vb = tb;
    return emit(std::move(out), {a.id, b.id}, [a, b, va, vb, r, k, c](Tape& t, const Node& n) {
        Tensor& ga = t.grad_buf(a.id);
        Tensor& gb = t.grad_buf(b.id);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) {
                double g = n.grad.at(i, j);
                for (std::size_t l = 0; l < k; ++l) {
                    ga.at(i, l) += g * vb.at(l, j);
                    gb.at(l, j) += va.at(i, l) * g;
                }
            }
    });
}

Var Tape::matmul_nt(Var a, Var b) {
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    require(ta.rank() == 2 && tb.rank() == 2, "matmul_nt: operands must be 2-D");
    require(ta.extent(1) == tb.extent(1), "matmul_nt: inner extents differ, " +
            shape_str(ta.shape()) + " x " + shape_str(tb.shape()) + "^T");
    std::size_t r = ta.extent(0), k = ta.extent(1), c = tb.extent(0);
    Tensor out({r, c});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            double v = 0.0;
            for (std::size_t l = 0; l < k; ++l) v += ta.at(i, l) * tb.at(j, l);
            out.at(i, j) = v;
        }
    check_finite(out, "matmul_nt");
    Tensor va = ta, vb = tb;
    return emit(std::move(out), {a.id, b.id}, [a, b, va, vb, r, k, c](Tape& t, const Node& n) {
        Tensor& ga = t.grad_buf(a.id);
        Tensor& gb = t.grad_buf(b.id);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) {
                double g = n.grad.at(i, j);
                for (std::size_t l = 0; l < k; ++l) {
                    ga.at(i, l) += g * vb.at(j, l);
                    gb.at(j, l) += g * va.at(i, l);
                }
            }
    });
}

Var Tape::matvec(Var a, Var x) {
    const Tensor& ta = node(a).value;
    const Tensor& tx = node(x).value;
    require(ta.rank() == 2 && tx.rank() == 1, "matvec: want 2-D and 1-D");
    require(ta.extent(1) == tx.extent(0), "matvec: inner extents differ");
    std::size_t r = ta.extent(0), k = ta.extent(1);
    Tensor out({r});
    for (std::size_t i = 0; i < r; ++i) {
        double v = 0.0;
        for (std::size_t l = 0; l < k; ++l) v += ta.at(i, l) * tx[l];
        out[i] = v;
    }
    check_finite(out, "matvec");
    Tensor va = ta, vx = tx;
    return emit(std::move(out), {a.id, x.id}, [a, x, va, vx, r, k](Tape& t, const Node& n) {
        Tensor& ga = t.grad_buf(a.id);
        Tensor& gx = t.grad_buf(x.id);
        for (std::size_t i = 0; i < r; ++i) {
            double g = n.grad[i];
            for (std::size_t l = 0; l < k; ++l) {
                ga.at(i, l) += g * vx[l];
                gx[l] += g * va.at(i, l);
            }
        }
    });
}

Var Tape::dot(Var a, Var b) {
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    require(ta.rank() == 1 && ta.same_shape(tb), "dot: want equal-length vectors");
    double v = 0.0;
    for (std::size_t i = 0; i < ta.numel(); ++i) v += ta[i] * tb[i];
    check_finite(Tensor::scalar(v), "dot");
    Tensor va = ta, vb = tb;
    return emit(Tensor::scalar(v), {a.id, b.id}, [a, b, va, vb](Tape& t, const Node& n) {
        Tensor& ga = t.grad_buf(a.id);
        Tensor& gb = t.grad_buf(b.id);
        double g = n.grad[0];
        for (std::size_t i = 0; i < va.numel(); ++i) {
            ga[i] += g * vb[i];
            gb[i] += g * va[i];
        }
    });
}

Var Tape::outer_sq_norm(Var x) {
    const Tensor& tx = node(x).value;
    double v = 0.0;
    for (std::size_t i = 0; i < tx.numel(); ++i) v += tx[i] * tx[i];
    Tensor vx = tx;
    return emit(Tensor::scalar(v), {x.id}, [x, vx](Tape& t, const Node& n) {
        Tensor& gx = t.grad_buf(x.id);
        double g = n.grad[0];
        for (std::size_t i = 0; i < vx.numel(); ++i) gx[i] += 2.0 * vx[i] * g;
    });
}

Var Tape::sum_all(Var a) {
    const Tensor& ta = node(a).value;
    double v = 0.0;
    for (std::size_t i = 0; i < ta.numel(); ++i) v += ta[i];
    return emit(Tensor::scalar(v), {a.id}, [a](Tape& t, const Node& n) {
        Tensor& ga = t.grad_buf(a.id);
        for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += n.grad[0];
    });
}

Var Tape::mean_all(Var a) {
    return scale(sum_all(a), 1.0 / static_cast<double>(node(a).value.numel()));
}

Var Tape::sum_axis(Var a, std::size_t axis) {
    const Tensor& ta = node(a).value;
    require(ta.rank() == 2 && axis < 2, "sum_axis: want 2-D and axis in {0,1}");
    std::size_t r = ta.extent(0), c = ta.extent(1);
    std::size_t out_n = axis == 0 ? c : r;
    Tensor out({out_n});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
            out[axis == 0 ? j : i] += ta.at(i, j);
    return emit(std::move(out), {a.id}, [a, axis, r, c](Tape& t, const Node& n) {
        Tensor& ga = t.grad_buf(a.id);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j)
                ga.at(i, j) += n.grad[axis == 0 ? j : i];
    });
}

Var Tape::mean_axis(Var a, std::size_t axis) {
    double denom = static_cast<double>(node(a).value.extent(axis));
    return scale(sum_axis(a, axis), 1.0 / denom);
}

Var Tape::slice_row(Var a, std::size_t row) {
    const Tensor& ta = node(a).value;
    require(ta.rank() == 2 && row < ta.extent(0), "slice_row: bad row");
    std::size_t c = ta.extent(1);
    Tensor out({c});
    for (std::size_t j = 0; j < c; ++j) out[j] = ta.at(row, j);
    return emit(std::move(out), {a.id}, [a, row, c](Tape& t, const Node& n) {
        Tensor& ga = t.grad_buf(a.id);
        for (std::size_t j = 0; j < c; ++j) ga.at(row, j) += n.grad[j];
    });
}

Var Tape::slice_vec(Var a, std::size_t start, std::size_t len) {
    const Tensor& ta = node(a).value;
    require(ta.rank() == 1 && start + len <= ta.extent(0) && len > 0, "slice_vec: bad range");
    Tensor out({len});
    for (std::size_t i = 0; i < len; ++i) out[i] = ta[start + i];
    return emit(std::move(out), {a.id}, [a, start, len](Tape& t, const Node& n) {
        Tensor& ga = t.grad_buf(a.id);
        for (std::size_t i = 0; i < len; ++i) ga[start + i] += n.grad[i];
    });
}

Var Tape::concat_rows(const std::vector<Var>& rows) {
    require(!rows.empty(), "concat_rows: empty input");
    std::size_t c = node(rows[0]).value.extent(0);
    std::vector<int> ids;
    Tensor out({rows.size(), c});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Tensor& t = node(rows[i]).value;
        require(t.rank() == 1 && t.extent(0) == c, "concat_rows: ragged rows");
        for (std::size_t j = 0; j < c; ++j) out.at(i, j) = t[j];
        ids.push_back(rows[i].id);
    }
    return emit(std::move(out), ids, [ids, c](Tape& t, const Node& n) {
        for (std::size_t i = 0; i < ids.size(); ++i) {
            Tensor& g = t.grad_buf(ids[i]);
            for (std::size_t j = 0; j < c; ++j) g[j] += n.grad.at(i, j);
        }
    });
}

Var Tape::concat_vec(Var a, Var b) {
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    require(ta.rank() == 1 && tb.rank() == 1, "concat_vec: want 1-D");
    std::size_t na = ta.extent(0), nb = tb.extent(0);
    Tensor out({na + nb});
    for (std::size_t i = 0; i < na; ++i) out[i] = ta[i];
    for (std::size_t i = 0; i < nb; ++i) out[na + i] = tb[i];
    return emit(std::move(out), {a.id, b.id}, [a, b, na, nb](Tape& t, const Node& n) {
        Tensor& ga = t.grad_buf(a.id);
        Tensor& gb = t.grad_buf(b.id);
        for (std::size_t i = 0; i < na; ++i) ga[i] += n.grad[i];
        for (std::size_t i = 0; i < nb; ++i) gb[i] += n.grad[na + i];
    });
}

Var Tape::softmax(Var a, std::size_t axis) {
    const Tensor& ta = node(a).value;
    require(ta.rank() == 1 || (ta.rank() == 2 && axis < 2), "softmax: want 1-D, or 2-D with axis in {0,1}");
    Tensor out = ta;
    auto slice_softmax = [](double* x, std::size_t n, std::size_t stride) {
        double mx = x[0];
        for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, x[i * stride]);
        double z = 0.0;
        for (std::size_t i = 0; i < n; ++i) z += std::exp(x[i * stride] - mx);
        for (std::size_t i = 0; i < n; ++i) x[i * stride] = std::exp(x[i * stride] - mx) / z;
    };
    if (ta.rank() == 1) {
        slice_softmax(out.data(), out.numel(), 1);
    } else {
        std::size_t r = ta.extent(0), c = ta.extent(1);
        if (axis == 1) {
            for (std::size_t i = 0; i < r; ++i) slice_softmax(out.data() + i * c, c, 1);
        } else {
            for (std::size_t j = 0; j < c; ++j) slice_softmax(out.data() + j, r, c);
        }
    }
    check_finite(out, "softmax");
    Tensor saved = out;
    return emit(std::move(out), {a.id}, [a, saved, axis](Tape& t, const Node& n) {
        Tensor& ga = t.grad_buf(a.id);
        auto slice_bwd = [](const double* s, const double* gy, double* gx,
                            std::size_t len, std::size_t stride) {
            double acc = 0.0;
            for (std::size_t i = 0; i < len; ++i) acc += gy[i * stride] * s[i * stride];
            for (std::size_t i = 0; i < len; ++i)
                gx[i * stride] += s[i * stride] * (gy[i * stride] - acc);
        };
        if (saved.rank() == 1) {
            slice_bwd(saved.data(), n.grad.data(), ga.data(), saved.numel(), 1);
        } else {
            std::size_t r = saved.extent(0), c = saved.extent(1);
            if (axis == 1) {
                for (std::size_t i = 0; i < r; ++i)
                    slice_bwd(saved.data() + i * c, n.grad.data() + i * c, ga.data() + i * c, c, 1);
            } else {
                for (std::size_t j = 0; j < c; ++j)
                    slice_bwd(saved.data() + j, n.grad.data() + j, ga.data() + j, r, c);
            }
        }
    });
}

Var Tape::logsumexp(Var a) {
    const Tensor& ta = node(a).value;
    require(ta.rank() == 1, "logsumexp: want 1-D");
    double mx = ta[0];
    for (std::size_t i = 1; i < ta.numel(); ++i) mx = std::max(mx, ta[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < ta.numel(); ++i) z += std::exp(ta[i] - mx);
    double v = mx + std::log(z);
    Tensor va = ta;
    return emit(Tensor::scalar(v), {a.id}, [a, va, v](Tape& t, const Node& n) {
        Tensor& ga = t.grad_buf(a.id);
        for (std::size_t i = 0; i < va.numel(); ++i)
            ga[i] += std::exp(va[i] - v) * n.grad[0];
    });
}

Var Tape::pick(Var a, std::size_t i) {
    const Tensor& ta = node(a).value;
    require(ta.rank() == 1 && i < ta.extent(0), "pick: index out of range");
    return emit(Tensor::scalar(ta[i]), {a.id}, [a, i](Tape& t, const Node& n) {
        t.grad_buf(a.id)[i] += n.grad[0];
    });
}

Var Tape::max_last(Var a) {
    const Tensor& ta = node(a).value;
    require(ta.rank() == 1 || ta.rank() == 2, "max_last: want 1-D or 2-D");
    std::size_t rows = ta.rank() == 2 ? ta.extent(0) : 1;
    std::size_t cols = ta.rank() == 2 ? ta.extent(1) : ta.extent(0);
    Tensor out = ta.rank() == 2 ? Tensor({rows}) : Tensor::scalar(0.0);
    std::vector<std::size_t> arg(rows, 0);
    for (std::size_t i = 0; i < rows; ++i) {
        const double* row = ta.data() + i * cols;
        std::size_t best = 0;
        for (std::size_t j = 1; j < cols; ++j)
            if (row[j] > row[best]) best = j;  // ties break to lowest index
        arg[i] = best;
        out[i] = row[best];
    }
    Var v = emit(std::move(out), {a.id}, [a, cols](Tape& t, const Node& n) {
        Tensor& ga = t.grad_buf(a.id);
        for (std::size_t i = 0; i < n.argmax.size(); ++i)
            ga[i * cols + n.argmax[i]] += n.grad[i];
    });
    node(v).argmax = std::move(arg);
    return v;
}

const std::vector<std::size_t>& Tape::argmax_of(Var max_node) const {
    return node(max_node).argmax;
}

Var Tape::scale_rows(Var x, Var v) {
    const Tensor& tx = node(x).value;
    const Tensor& tv = node(v).value;
    require(tx.rank() == 2 && tv.rank() == 1 && tv.extent(0) == tx.extent(0),
            "scale_rows: want [r,c] and [r]");
    std::size_t r = tx.extent(0), c = tx.extent(1);
    Tensor out = tx;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.at(i, j) *= tv[i];
    Tensor vx = tx, vv = tv;
    return emit(std::move(out), {x.id, v.id}, [x, v, vx, vv, r, c](Tape& t, const Node& n) {
        Tensor& gx = t.grad_buf(x.id);
        Tensor& gv = t.grad_buf(v.id);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) {
                double g = n.grad.at(i, j);
                gx.at(i, j) += g * vv[i];
                gv[i] += g * vx.at(i, j);
            }
    });
}

Var Tape::scale_cols(Var x, Var v) {
    const Tensor& tx = node(x).value;
    const Tensor& tv = node(v).value;
    require(tx.rank() == 2 && tv.rank() == 1 && tv.extent(0) == tx.extent(1),
            "scale_cols: want [r,c] and [c]");
    std::size_t r = tx.extent(0), c = tx.extent(1);
    Tensor out = tx;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.at(i, j) *= tv[j];
    Tensor vx = tx, vv = tv;
    return emit(std::move(out), {x.id, v.id}, [x, v, vx, vv, r, c](Tape& t, const Node& n) {
        Tensor& gx = t.grad_buf(x.id);
        Tensor& gv = t.grad_buf(v.id);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) {
                double g = n.grad.at(i, j);
                gx.at(i, j) += g * vv[j];
                gv[j] += g * vx.at(i, j);
            }
    });
}

Var Tape::add_rowvec(Var x, Var b) {
    const Tensor& tx = node(x).value;
    const Tensor& tb = node(b).value;
    require(tx.rank() == 2 && tb.rank() == 1 && tb.extent(0) == tx.extent(1),
            "add_rowvec: want [r,c] and [c]");
    std::size_t r = tx.extent(0), c = tx.extent(1);
    Tensor out = tx;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.at(i, j) += tb[j];
    return emit(std::move(out), {x.id, b.id}, [x, b, r, c](Tape& t, const Node& n) {
        Tensor& gx = t.grad_buf(x.id);
        Tensor& gb = t.grad_buf(b.id);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) {
                gx.at(i, j) += n.grad.at(i, j);
                gb[j] += n.grad.at(i, j);
            }
    });
}

Var Tape::grouped_two_layer(Var x, Var wa, Var wb) {
    const Tensor& tx = node(x).value;
    const Tensor& ta = node(wa).value;
    const Tensor& tb = node(wb).value;
    require(tx.rank() == 2 && ta.rank() == 3 && tb.rank() == 3, "grouped_two_layer: want 2-D input, 3-D weights");
    std::size_t r = tx.extent(0), in = tx.extent(1);
    require(ta.extent(0) == r && tb.extent(0) == r, "grouped_two_layer: group count mismatch");
    require(ta.extent(1) == in, "grouped_two_layer: input width mismatch");
    std::size_t h = ta.extent(2);
    require(tb.extent(1) == h, "grouped_two_layer: hidden width mismatch");
    std::size_t out_w = tb.extent(2);

    Tensor hidden({r, h});
    Tensor out({r, out_w});
    for (std::size_t g = 0; g < r; ++g) {
        const double* xg = tx.data() + g * in;
        const double* wag = ta.data() + g * in * h;
        const double* wbg = tb.data() + g * h * out_w;
        double* hg = hidden.data() + g * h;
        for (std::size_t j = 0; j < h; ++j) {
            double v = 0.0;
            for (std::size_t i = 0; i < in; ++i) v += xg[i] * wag[i * h + j];
            hg[j] = std::tanh(v);
        }
        double* og = out.data() + g * out_w;
        for (std::size_t k = 0; k < out_w; ++k) {
            double v = 0.0;
            for (std::size_t j = 0; j < h; ++j) v += hg[j] * wbg[j * out_w + k];
            og[k] = v;
        }
    }
    check_finite(out, "grouped_two_layer");
    Tensor vx = tx, va = ta, vb = tb;
    return emit(std::move(out), {x.id, wa.id, wb.id},
                [x, wa, wb, vx, va, vb, hidden, r, in, h, out_w](Tape& t, const Node& n) {
        Tensor& gx = t.grad_buf(x.id);
        Tensor& ga = t.grad_buf(wa.id);
        Tensor& gb = t.grad_buf(wb.id);
        for (std::size_t g = 0; g < r; ++g) {
            const double* xg = vx.data() + g * in;
            const double* wag = va.data() + g * in * h;
            const double* wbg = vb.data() + g * h * out_w;
            const double* hg = hidden.data() + g * h;
            const double* gz = n.grad.data() + g * out_w;
            double* gxg = gx.data() + g * in;
            double* gag = ga.data() + g * in * h;
            double* gbg = gb.data() + g * h * out_w;
            for (std::size_t j = 0; j < h; ++j) {
                double gh = 0.0;
                for (std::size_t k = 0; k < out_w; ++k) {
                    gbg[j * out_w + k] += hg[j] * gz[k];
                    gh += wbg[j * out_w + k] * gz[k];
                }
                double gu = gh * (1.0 - hg[j] * hg[j]);
                for (std::size_t i = 0; i < in; ++i) {
                    gag[i * h + j] += xg[i] * gu;
                    gxg[i] += wag[i * h + j] * gu;
                }
            }
        }
    });
}

const Tensor& Tape::val(Var v) const { return node(v).value; }

const Tensor& Tape::grad(Var v) const {
    const Node& n = node(v);
    if (n.grad.numel() == 0) throw NumericError("grad requested before backward()");
    return n.grad;
}

void Tape::backward(Var root) {
    const Node& rn = node(root);
    if (rn.value.numel() != 1) throw DimensionError("backward: root must be scalar");
    for (int i = 0; i <= root.id; ++i) grad_buf(i);
    grad_buf(root.id)[0] = 1.0;
    for (int i = root.id; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.backprop) n.backprop(*this, n);
    }
    backward_done_ = true;
}

Tensor Tape::grad_for(const Tensor& p) const {
    auto it = param_nodes_.find(&p);
    if (it == param_nodes_.end() || nodes_[static_cast<std::size_t>(it->second)].grad.numel() == 0)
        return Tensor::zeros(p.shape());
    return nodes_[static_cast<std::size_t>(it->second)].grad;
}

double grad_check(std::span<Tensor* const> params,
                  const std::function<Var(Tape&)>& build, double eps) {
    Tape tape;
    Var root = build(tape);
    tape.backward(root);
    std::vector<Tensor> analytic;
    analytic.reserve(params.size());
    for (Tensor* p : params) analytic.push_back(tape.grad_for(*p));

    auto eval = [&build]() {
        Tape t;
        Var r = build(t);
        return t.val(r).item();
    };

    double worst = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = *params[pi];
        for (std::size_t i = 0; i < p.numel(); ++i) {
            double saved = p[i];
            p[i] = saved + eps;
            double hi = eval();
            p[i] = saved - eps;
            double lo = eval();
            p[i] = saved;
            double numeric = (hi - lo) / (2.0 * eps);
            double a = analytic[pi][i];
            double err = std::abs(a - numeric) / std::max(1.0, std::abs(a));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace agzsl::num
