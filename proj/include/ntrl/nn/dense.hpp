#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

namespace ntrl::nn {

/// y = b + x W for W stored row-major as [in][out].
template <class T>
void dense_forward(std::span<const T> w, std::span<const T> b, std::span<const T> x, std::span<T> y) {
  const std::size_t out = y.size();
  std::copy(b.begin(), b.end(), y.begin());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T xi = x[i];
    if (xi == T(0)) continue;
    const T* row = w.data() + i * out;
    for (std::size_t j = 0; j < out; ++j) y[j] += xi * row[j];
  }
}

/// Accumulates dW += x^T dy and db += dy; writes dx = W dy when dx is non-empty.
template <class T>
void dense_backward(std::span<const T> w, std::span<const T> x, std::span<const T> dy, std::span<T> dw,
                    std::span<T> db, std::span<T> dx) {
  const std::size_t out = dy.size();
  for (std::size_t j = 0; j < out; ++j) db[j] += dy[j];
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T* row = w.data() + i * out;
    T* grow = dw.data() + i * out;
    const T xi = x[i];
    T acc = T(0);
    for (std::size_t j = 0; j < out; ++j) {
      grow[j] += xi * dy[j];
      acc += row[j] * dy[j];
    }
    if (!dx.empty()) dx[i] = acc;
  }
}

template <class T>
void relu_inplace(std::span<T> v) {
  for (auto& x : v) x = std::max(x, T(0));
}

/// Zeroes gradient entries where the forward activation was clipped.
template <class T>
void relu_backward(std::span<const T> activated, std::span<T> grad) {
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!(activated[i] > T(0))) grad[i] = T(0);
}

/// Log-softmax over entries with mask[i] true; masked entries get -inf.
template <class T, class Mask>
void log_softmax(std::span<const T> logits, const Mask& allowed, std::span<T> out) {
  T m = -std::numeric_limits<T>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (allowed[i]) m = std::max(m, logits[i]);
  T sum = T(0);
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (allowed[i]) sum += std::exp(logits[i] - m);
  const T lse = m + std::log(sum);
  for (std::size_t i = 0; i < logits.size(); ++i)
    out[i] = allowed[i] ? logits[i] - lse : -std::numeric_limits<T>::infinity();
}

}  // namespace ntrl::nn
