#pragma once

#include <functional>
#include <memory>

#include "oldroyd/spaces.hpp"

namespace oldroyd {

/// Elementwise view of a velocity-like field. Everything downstream
/// (transport, upwinding, assembly) evaluates velocities through this
/// interface so that finite element fields, projected fields and analytic
/// test fields are interchangeable.
class VelocityEvaluator {
 public:
  virtual ~VelocityEvaluator() = default;
  virtual Vec2 value(const Mesh& m, int k, const std::array<double, 3>& bary) const = 0;
  virtual Mat2 gradient(const Mesh& m, int k, const std::array<double, 3>& bary) const = 0;
  /// Whether u.n is single-valued on internal edges.
  virtual bool single_valued_normal() const = 0;
};

class ZeroVelocity final : public VelocityEvaluator {
 public:
  Vec2 value(const Mesh&, int, const std::array<double, 3>&) const override {
    return {0.0, 0.0};
  }
  Mat2 gradient(const Mesh&, int, const std::array<double, 3>&) const override {
    return {};
  }
  bool single_valued_normal() const override { return true; }
};

class FEVelocity final : public VelocityEvaluator {
 public:
  explicit FEVelocity(std::shared_ptr<const VectorField> f) : f_(std::move(f)) {}

  Vec2 value(const Mesh& m, int k, const std::array<double, 3>& b) const override {
    return f_->value(m, k, b);
  }
  Mat2 gradient(const Mesh& m, int k, const std::array<double, 3>& b) const override {
    return f_->gradient(m, k, b);
  }
  bool single_valued_normal() const override {
    return f_->dofs->space.family != Family::CRVector;
  }
  const VectorField& field() const { return *f_; }
  const std::shared_ptr<const VectorField>& shared_field() const { return f_; }

 private:
  std::shared_ptr<const VectorField> f_;
};

class AnalyticVelocity final : public VelocityEvaluator {
 public:
  AnalyticVelocity(std::function<Vec2(const Vec2&)> value,
                   std::function<Mat2(const Vec2&)> gradient = nullptr)
      : value_(std::move(value)), gradient_(std::move(gradient)) {}

  Vec2 value(const Mesh& m, int k, const std::array<double, 3>& b) const override {
    return value_(m.point(k, b));
  }
  Mat2 gradient(const Mesh& m, int k, const std::array<double, 3>& b) const override {
    return gradient_ ? gradient_(m.point(k, b)) : Mat2{};
  }
  bool single_valued_normal() const override { return true; }

 private:
  std::function<Vec2(const Vec2&)> value_;
  std::function<Mat2(const Vec2&)> gradient_;
};

}  // namespace oldroyd
