#pragma once

// Matrix-free linear operator contract. Every operator the Krylov solvers
// touch — projector, finite differences, diagonal reweightings, stacked
// systems — implements this interface; nothing in the solve path ever forms
// a dense matrix.

#include <cstddef>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "types.hpp"
#include "vector_ops.hpp"

namespace kryct {

/// A linear operator A : R^domain -> R^range exposed through matrix-vector
/// products only.
///
/// Contract: apply/apply_adjoint must be genuinely adjoint pairs, i.e.
/// <A x, y> == <x, A^T y> for all x, y (up to roundoff). Both methods add
/// nothing to global state and must not alias input and output spans.
class LinearMap {
  public:
    virtual ~LinearMap() = default;

    virtual std::size_t domain_size() const = 0;
    virtual std::size_t range_size() const = 0;

    /// out = A * x, with x.size() == domain_size(), out.size() == range_size().
    virtual void apply(std::span<const double> x, std::span<double> out) const = 0;

    /// out = A^T * y, with y.size() == range_size(), out.size() == domain_size().
    virtual void apply_adjoint(std::span<const double> y, std::span<double> out) const = 0;

    std::vector<double> apply(std::span<const double> x) const {
        check_domain(x.size());
        std::vector<double> out(range_size());
        apply(x, out);
        return out;
    }
    std::vector<double> apply_adjoint(std::span<const double> y) const {
        check_range(y.size());
        std::vector<double> out(domain_size());
        apply_adjoint(y, out);
        return out;
    }

  protected:
    void check_domain(std::size_t n) const {
        if (n != domain_size()) throw ConfigError("linear map: domain size mismatch");
    }
    void check_range(std::size_t n) const {
        if (n != range_size()) throw ConfigError("linear map: range size mismatch");
    }
};

class IdentityMap final : public LinearMap {
  public:
    using LinearMap::apply;
    using LinearMap::apply_adjoint;

    explicit IdentityMap(std::size_t n) : n_(n) {}

    std::size_t domain_size() const override { return n_; }
    std::size_t range_size() const override { return n_; }

    void apply(std::span<const double> x, std::span<double> out) const override {
        check_domain(x.size());
        check_range(out.size());
        for (std::size_t i = 0; i < n_; ++i) out[i] = x[i];
    }
    void apply_adjoint(std::span<const double> y, std::span<double> out) const override {
        apply(y, out);
    }

  private:
    std::size_t n_;
};

/// Multiplication by diag(w). Self-adjoint.
class DiagonalMap final : public LinearMap {
  public:
    using LinearMap::apply;
    using LinearMap::apply_adjoint;

    explicit DiagonalMap(std::vector<double> weights) : w_(std::move(weights)) {}

    std::size_t domain_size() const override { return w_.size(); }
    std::size_t range_size() const override { return w_.size(); }

    void apply(std::span<const double> x, std::span<double> out) const override {
        check_domain(x.size());
        check_range(out.size());
        for (std::size_t i = 0; i < w_.size(); ++i) out[i] = w_[i] * x[i];
    }
    void apply_adjoint(std::span<const double> y, std::span<double> out) const override {
        apply(y, out);
    }

    const std::vector<double>& weights() const { return w_; }

  private:
    std::vector<double> w_;
};

/// Composition (A ∘ B)(x) = A(B(x)); adjoint is B^T ∘ A^T.
class ComposedMap final : public LinearMap {
  public:
    using LinearMap::apply;
    using LinearMap::apply_adjoint;

    ComposedMap(std::shared_ptr<const LinearMap> outer, std::shared_ptr<const LinearMap> inner)
        : outer_(std::move(outer)), inner_(std::move(inner)) {
        if (!outer_ || !inner_) throw ConfigError("compose: null operand");
        if (outer_->domain_size() != inner_->range_size())
            throw ConfigError("compose: inner range must match outer domain");
    }

    std::size_t domain_size() const override { return inner_->domain_size(); }
    std::size_t range_size() const override { return outer_->range_size(); }

    void apply(std::span<const double> x, std::span<double> out) const override {
        check_domain(x.size());
        check_range(out.size());
        std::vector<double> mid(inner_->range_size());
        inner_->apply(x, mid);
        outer_->apply(mid, out);
    }
    void apply_adjoint(std::span<const double> y, std::span<double> out) const override {
        check_range(y.size());
        check_domain(out.size());
        std::vector<double> mid(outer_->domain_size());
        outer_->apply_adjoint(y, mid);
        inner_->apply_adjoint(mid, out);
    }

  private:
    std::shared_ptr<const LinearMap> outer_;
    std::shared_ptr<const LinearMap> inner_;
};

inline std::shared_ptr<const LinearMap> compose(std::shared_ptr<const LinearMap> outer,
                                                std::shared_ptr<const LinearMap> inner) {
    return std::make_shared<ComposedMap>(std::move(outer), std::move(inner));
}

/// One row block of a vertically stacked system: scale * map.
struct ScaledBlock {
    double scale = 1.0;
    std::shared_ptr<const LinearMap> map;
};

/// Vertical stack [c1*A1; c2*A2; ...] over a common domain. apply writes the
/// blocks in order; apply_adjoint sums c_i * A_i^T y_i. This is how the
/// augmented least-squares systems of the reweighted solvers are assembled.
class StackedMap final : public LinearMap {
  public:
    using LinearMap::apply;
    using LinearMap::apply_adjoint;

    explicit StackedMap(std::vector<ScaledBlock> blocks) : blocks_(std::move(blocks)) {
        if (blocks_.empty()) throw ConfigError("stack: needs at least one block");
        for (const auto& b : blocks_)
            if (!b.map) throw ConfigError("stack: null block");
        domain_ = blocks_.front().map->domain_size();
        range_ = 0;
        offsets_.reserve(blocks_.size());
        for (const auto& b : blocks_) {
            if (b.map->domain_size() != domain_)
                throw ConfigError("stack: all blocks must share the domain");
            offsets_.push_back(range_);
            range_ += b.map->range_size();
        }
    }

    std::size_t domain_size() const override { return domain_; }
    std::size_t range_size() const override { return range_; }
    std::size_t block_count() const { return blocks_.size(); }
    std::size_t block_offset(std::size_t i) const { return offsets_[i]; }
    const ScaledBlock& block(std::size_t i) const { return blocks_[i]; }

    void apply(std::span<const double> x, std::span<double> out) const override {
        check_domain(x.size());
        check_range(out.size());
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            auto slice = out.subspan(offsets_[i], blocks_[i].map->range_size());
            blocks_[i].map->apply(x, slice);
            if (blocks_[i].scale != 1.0) scale(blocks_[i].scale, slice);
        }
    }

    void apply_adjoint(std::span<const double> y, std::span<double> out) const override {
        check_range(y.size());
        check_domain(out.size());
        std::fill(out.begin(), out.end(), 0.0);
        std::vector<double> tmp(domain_);
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            auto slice = y.subspan(offsets_[i], blocks_[i].map->range_size());
            blocks_[i].map->apply_adjoint(slice, tmp);
            axpy(blocks_[i].scale, tmp, out);
        }
    }

  private:
    std::vector<ScaledBlock> blocks_;
    std::vector<std::size_t> offsets_;
    std::size_t domain_ = 0;
    std::size_t range_ = 0;
};

inline std::shared_ptr<const StackedMap> stack_maps(std::vector<ScaledBlock> blocks) {
    return std::make_shared<StackedMap>(std::move(blocks));
}

}  // namespace kryct
