#pragma once

#include <map>
#include <string>
#include <vector>

#include "vsum/tensor.hpp"

VSUM_NS_BEGIN

// Reverse-mode tape covering exactly the primitives the scoring network
// needs. A Graph records one forward pass; backward() replays it in exact
// reverse order and accumulates gradients into every registered parameter.
// Graphs are single-threaded and one-shot: a second backward without new
// recording is rejected.
class Graph {
public:
    explicit Graph(bool track_gradients = true) : track_(track_gradients) {}

    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    // Constant leaf; the tensor is moved into the tape.
    int input(Tensor2 t);
    // Constant leaf referencing an externally owned tensor (no copy); the
    // tensor must outlive the graph.
    int input_ref(const Tensor2& t);
    // Leaf referencing an externally owned parameter. The referenced tensor
    // must outlive the graph. Gradients are tracked only when the graph was
    // created with track_gradients.
    int param(const std::string& name, const Tensor2& p);

    int matmul(int a, int b);
    int matmul_nt(int a, int b);  // a * b^T
    int add(int a, int b);
    int add_broadcast(int a, int row);
    int elementwise_mul(int a, int b);
    int scale(int a, Real c);
    int softmax_rows(int a);
    int l2_normalize_rows(int a);
    int layer_norm_rows(int a, int gain, int bias, Real eps = Real(1e-5));
    int sigmoid(int a);
    int relu(int a);
    int concat_cols(int a, int b);
    int dropout(int a, Real rate, Rng& rng, bool training);
    int sum(int a);  // 1x1
    int bce_loss(int pred, const std::vector<Real>& target);
    int mse_loss(int pred, const std::vector<Real>& target);

    const Tensor2& value(int id) const;
    // Gradient of the most recent backward pass w.r.t. node id (leaves only
    // make sense to query). Zero tensor if the node never received one.
    Tensor2 gradient(int id) const;

    // Runs the backward pass from a scalar loss node and returns one
    // gradient per registered parameter, zero-filled for parameters the
    // loss does not depend on.
    std::map<std::string, Tensor2> backward(int loss);

    bool tracking() const { return track_; }
    std::size_t node_count() const { return nodes_.size(); }

private:
    enum class Op {
        kInput,
        kParam,
        kMatMul,
        kMatMulNT,
        kAdd,
        kAddBroadcast,
        kMul,
        kScale,
        kSoftmax,
        kL2Norm,
        kLayerNorm,
        kSigmoid,
        kRelu,
        kConcatCols,
        kSum,
        kBce,
        kMse,
    };

    struct Node {
        Op op;
        int a = -1;
        int b = -1;
        int c = -1;
        Tensor2 val;                   // owned output (unused for ref leaves)
        const Tensor2* ref = nullptr;  // parameter leaves
        Tensor2 grad;
        bool needs_grad = false;
        Real scalar = 0;
        std::vector<Real> target;
    };

    const Tensor2& val_of(const Node& n) const { return n.ref ? *n.ref : n.val; }
    int push(Node n);
    void check_id(int id, const char* ctx) const;
    Tensor2& grad_buf(Node& n);
    void propagate(Node& n);

    std::vector<Node> nodes_;
    std::vector<std::pair<std::string, int>> params_;  // name -> node id
    bool track_;
    bool backward_done_ = false;
};

VSUM_NS_END
