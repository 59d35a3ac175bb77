#ifndef DSD_AUTODIFF_HPP
#define DSD_AUTODIFF_HPP

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dsd/common.hpp"

namespace dsd {

using Mat = Eigen::MatrixXd;

// Reverse-mode tape over dense matrices. One Graph per forward pass; nodes are
// created in topological order, backward() replays them in reverse.
class Graph {
public:
    int input(Mat m) { return push(std::move(m), {}); }

    // Leaf tied to a named parameter; gradients are read back per name.
    int param(const std::string& name, const Mat& value) {
        auto it = param_nodes_.find(name);
        if (it != param_nodes_.end()) return it->second;
        int id = push(value, {});
        param_nodes_[name] = id;
        return id;
    }

    int matmul(int a, int b) {
        int id = push(val(a) * val(b), [this, a, b](int self) {
            nodes_[a].grad.noalias() += nodes_[self].grad * val(b).transpose();
            nodes_[b].grad.noalias() += val(a).transpose() * nodes_[self].grad;
        });
        return id;
    }

    // A * B^T
    int matmul_nt(int a, int b) {
        return push(val(a) * val(b).transpose(), [this, a, b](int self) {
            nodes_[a].grad.noalias() += nodes_[self].grad * val(b);
            nodes_[b].grad.noalias() += nodes_[self].grad.transpose() * val(a);
        });
    }

    int add(int a, int b) {
        return push(val(a) + val(b), [this, a, b](int self) {
            nodes_[a].grad += nodes_[self].grad;
            nodes_[b].grad += nodes_[self].grad;
        });
    }

    int sub(int a, int b) {
        return push(val(a) - val(b), [this, a, b](int self) {
            nodes_[a].grad += nodes_[self].grad;
            nodes_[b].grad -= nodes_[self].grad;
        });
    }

    int mul(int a, int b) {
        return push(val(a).cwiseProduct(val(b)), [this, a, b](int self) {
            nodes_[a].grad += nodes_[self].grad.cwiseProduct(val(b));
            nodes_[b].grad += nodes_[self].grad.cwiseProduct(val(a));
        });
    }

    int scale(int a, double s) {
        return push(val(a) * s, [this, a, s](int self) {
            nodes_[a].grad += nodes_[self].grad * s;
        });
    }

    // broadcast a 1xC row over every row of a
    int add_row(int a, int r) {
        Mat out = val(a);
        out.rowwise() += val(r).row(0);
        return push(std::move(out), [this, a, r](int self) {
            nodes_[a].grad += nodes_[self].grad;
            nodes_[r].grad += nodes_[self].grad.colwise().sum();
        });
    }

    int mul_row(int a, int r) {
        Mat out = (val(a).array().rowwise() * val(r).row(0).array()).matrix();
        return push(std::move(out), [this, a, r](int self) {
            nodes_[a].grad += (nodes_[self].grad.array().rowwise() * val(r).row(0).array()).matrix();
            nodes_[r].grad += (nodes_[self].grad.cwiseProduct(val(a))).colwise().sum();
        });
    }

    int concat_cols(int a, int b) {
        Mat out(val(a).rows(), val(a).cols() + val(b).cols());
        out << val(a), val(b);
        return push(std::move(out), [this, a, b](int self) {
            auto ca = val(a).cols();
            nodes_[a].grad += nodes_[self].grad.leftCols(ca);
            nodes_[b].grad += nodes_[self].grad.rightCols(val(b).cols());
        });
    }

    int slice_cols(int a, int c0, int n) {
        return push(val(a).middleCols(c0, n), [this, a, c0, n](int self) {
            nodes_[a].grad.middleCols(c0, n) += nodes_[self].grad;
        });
    }

    int concat_rows(int a, int b) {
        Mat out(val(a).rows() + val(b).rows(), val(a).cols());
        out << val(a), val(b);
        return push(std::move(out), [this, a, b](int self) {
            auto ra = val(a).rows();
            nodes_[a].grad += nodes_[self].grad.topRows(ra);
            nodes_[b].grad += nodes_[self].grad.bottomRows(val(b).rows());
        });
    }

    int slice_rows(int a, int r0, int n) {
        return push(val(a).middleRows(r0, n), [this, a, r0, n](int self) {
            nodes_[a].grad.middleRows(r0, n) += nodes_[self].grad;
        });
    }

    // Arbitrary reindexing: out element k takes a's flat (row-major) element
    // idx[k], or 0 when idx[k] < 0. Covers space-to-depth and zero padding.
    int reindex(int a, int rows, int cols, std::vector<long> idx) {
        const Mat& src = val(a);
        Mat out(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) {
                long k = idx[static_cast<std::size_t>(i) * cols + j];
                out(i, j) = k < 0 ? 0.0 : src(k / src.cols(), k % src.cols());
            }
        return push(std::move(out), [this, a, rows, cols, idx = std::move(idx)](int self) {
            Mat& ga = nodes_[a].grad;
            const Mat& g = nodes_[self].grad;
            for (int i = 0; i < rows; ++i)
                for (int j = 0; j < cols; ++j) {
                    long k = idx[static_cast<std::size_t>(i) * cols + j];
                    if (k >= 0) ga(k / ga.cols(), k % ga.cols()) += g(i, j);
                }
        });
    }

    int layernorm(int a, double eps = 1e-6) {
        const Mat& x = val(a);
        Mat y(x.rows(), x.cols());
        Eigen::VectorXd inv_sigma(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            double mu = x.row(i).mean();
            double var = (x.row(i).array() - mu).square().mean();
            double is = 1.0 / std::sqrt(var + eps);
            inv_sigma(i) = is;
            y.row(i) = (x.row(i).array() - mu) * is;
        }
        int id = push(y, [this, a, inv_sigma](int self) {
            const Mat& y = nodes_[self].val;
            const Mat& dy = nodes_[self].grad;
            Mat& dx = nodes_[a].grad;
            for (Eigen::Index i = 0; i < y.rows(); ++i) {
                double m1 = dy.row(i).mean();
                double m2 = dy.row(i).cwiseProduct(y.row(i)).mean();
                dx.row(i) += inv_sigma(i) * (dy.row(i).array() - m1 - y.row(i).array() * m2).matrix();
            }
        });
        return id;
    }

    int gelu(int a) {
        auto cdf = [](double x) { return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); };
        Mat y = val(a).unaryExpr([&](double x) { return x * cdf(x); });
        return push(std::move(y), [this, a, cdf](int self) {
            const Mat& x = val(a);
            Mat d = x.unaryExpr([&](double v) {
                return cdf(v) + v * std::exp(-0.5 * v * v) / std::sqrt(2.0 * M_PI);
            });
            nodes_[a].grad += nodes_[self].grad.cwiseProduct(d);
        });
    }

    int softmax_rows(int a) {
        const Mat& x = val(a);
        Mat y(x.rows(), x.cols());
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            Eigen::ArrayXd e = (x.row(i).array() - x.row(i).maxCoeff()).exp();
            y.row(i) = (e / e.sum()).matrix();
        }
        return push(std::move(y), [this, a](int self) {
            const Mat& y = nodes_[self].val;
            const Mat& dy = nodes_[self].grad;
            Mat& dx = nodes_[a].grad;
            for (Eigen::Index i = 0; i < y.rows(); ++i) {
                double dot = dy.row(i).dot(y.row(i));
                dx.row(i) += y.row(i).cwiseProduct((dy.row(i).array() - dot).matrix());
            }
        });
    }

    // scalar: mean of elementwise squared differences
    int mse(int a, int b) {
        const Mat& x = val(a);
        const Mat& y = val(b);
        double n = static_cast<double>(x.size());
        Mat out(1, 1);
        out(0, 0) = (x - y).squaredNorm() / n;
        return push(std::move(out), [this, a, b, n](int self) {
            double g = nodes_[self].grad(0, 0);
            Mat d = (2.0 * g / n) * (val(a) - val(b));
            nodes_[a].grad += d;
            nodes_[b].grad -= d;
        });
    }

    const Mat& val(int id) const { return nodes_[id].val; }

    void backward(int root) {
        for (auto& n : nodes_) n.grad = Mat::Zero(n.val.rows(), n.val.cols());
        nodes_[root].grad.setOnes();
        for (int i = root; i >= 0; --i)
            if (nodes_[i].back) nodes_[i].back(i);
    }

    const Mat& grad(int id) const { return nodes_[id].grad; }

    bool has_param(const std::string& name) const { return param_nodes_.count(name) > 0; }

    // zero matrix when the parameter never entered this graph
    Mat param_grad(const std::string& name, int rows, int cols) const {
        auto it = param_nodes_.find(name);
        if (it == param_nodes_.end()) return Mat::Zero(rows, cols);
        return nodes_[it->second].grad;
    }

private:
    struct Node {
        Mat val;
        Mat grad;
        std::function<void(int)> back;
    };

    int push(Mat v, std::function<void(int)> back) {
        nodes_.push_back(Node{std::move(v), Mat(), std::move(back)});
        return static_cast<int>(nodes_.size()) - 1;
    }

    std::vector<Node> nodes_;
    std::map<std::string, int> param_nodes_;
};

}  // namespace dsd

#endif
