#pragma once

#include <string>
#include <vector>

namespace vrpseg {

enum class DatasetId {
    kPascal5i,
    kCoco20i,
    kCocoToPascal,
    kSynthetic,
};

const char* dataset_name(DatasetId id);
DatasetId dataset_from_name(const std::string& name);  // throws ConfigError

/// Class-disjoint train/test partition. train_classes is the concatenation of
/// the other folds' test lists, in fold order.
struct FoldSpec {
    DatasetId dataset = DatasetId::kPascal5i;
    int fold = 0;
    std::vector<std::string> test_classes;
    std::vector<std::string> train_classes;
};

/// Golden fold tables for the three benchmark datasets. fold must be 0..3 and
/// dataset must not be kSynthetic; throws UnknownFold otherwise.
FoldSpec fold_spec(DatasetId dataset, int fold);

/// Synthetic analogue: fold f tests {vocab[2f], vocab[2f+1]}, trains on the
/// rest in vocabulary order. Requires 2*fold+1 < vocab.size().
FoldSpec synthetic_fold(const std::vector<std::string>& vocab, int fold);

}  // namespace vrpseg
