#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace vrpseg {

/// Mutable view into a named parameter tensor. Shape is row-major metadata;
/// `data` points at the owner's storage (Eigen matrices included, whose
/// element order is stable for a fixed shape). `decay` marks projection
/// weights eligible for decoupled weight decay.
struct NamedTensorView {
    std::string name;
    std::vector<int> shape;
    double* data = nullptr;
    std::size_t size = 0;
    bool decay = false;
};

/// FNV-1a over raw bytes; checkpoint manifests store these per tensor file.
std::uint64_t fnv1a64(const void* bytes, std::size_t n);

}  // namespace vrpseg
