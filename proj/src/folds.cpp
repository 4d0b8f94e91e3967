#include "vrpseg/folds.hpp"

#include <array>
#include <cstddef>

#include "vrpseg/error.hpp"

namespace vrpseg {
namespace {

using Table = std::array<std::vector<std::string>, 4>;

const Table& pascal5i_table() {
    static const Table t = {{
        {"Aeroplane", "Bicycle", "Bird", "Boat", "Bottle"},
        {"Bus", "Car", "Cat", "Chair", "Cow"},
        {"Dining table", "Dog", "Horse", "Motorbike", "Person"},
        {"Potted plant", "Sheep", "Sofa", "Train", "TV/monitor"},
    }};
    return t;
}

// Interleaved split of the 80 COCO classes: fold i tests classes with
// 1-based index ≡ i+1 (mod 4). The published table violates disjointness
// (Spoon and Sink listed twice, Refrigerator absent); this canonical form
// is the unique repair that keeps every listed-once class in its fold.
const Table& coco20i_table() {
    static const Table t = {{
        {"Person", "Airplane", "Boat", "Parking meter", "Dog", "Elephant",
         "Backpack", "Suitcase", "Sports ball", "Skateboard", "Wine glass",
         "Spoon", "Sandwich", "Hot dog", "Chair", "Dining table", "Mouse",
         "Microwave", "Refrigerator", "Scissors"},
        {"Bicycle", "Bus", "Traffic light", "Bench", "Horse", "Bear",
         "Umbrella", "Frisbee", "Kite", "Surfboard", "Cup", "Bowl", "Orange",
         "Pizza", "Couch", "Toilet", "Remote", "Oven", "Book", "Teddy bear"},
        {"Car", "Train", "Fire hydrant", "Bird", "Sheep", "Zebra", "Handbag",
         "Skis", "Baseball bat", "Tennis racket", "Fork", "Banana", "Broccoli",
         "Donut", "Potted plant", "TV", "Keyboard", "Toaster", "Clock",
         "Hair drier"},
        {"Motorcycle", "Truck", "Stop sign", "Cat", "Cow", "Giraffe", "Tie",
         "Snowboard", "Baseball glove", "Bottle", "Knife", "Apple", "Carrot",
         "Cake", "Bed", "Laptop", "Cell phone", "Sink", "Vase", "Toothbrush"},
    }};
    return t;
}

const Table& coco_to_pascal_table() {
    static const Table t = {{
        {"Aeroplane", "Boat", "Chair", "Dining table", "Dog", "Person"},
        {"Horse", "Sofa", "Bicycle", "Bus"},
        {"Bird", "Car", "Potted plant", "Sheep", "Train", "TV/monitor"},
        {"Bottle", "Cow", "Cat", "Motorbike"},
    }};
    return t;
}

const Table& table_for(DatasetId dataset) {
    switch (dataset) {
        case DatasetId::kPascal5i:
            return pascal5i_table();
        case DatasetId::kCoco20i:
            return coco20i_table();
        case DatasetId::kCocoToPascal:
            return coco_to_pascal_table();
        case DatasetId::kSynthetic:
            break;
    }
    throw Error(ErrorCode::UnknownFold,
                "dataset '" + std::string(dataset_name(dataset)) +
                    "' has no golden fold table");
}

}  // namespace

const char* dataset_name(DatasetId id) {
    switch (id) {
        case DatasetId::kPascal5i:
            return "pascal5i";
        case DatasetId::kCoco20i:
            return "coco20i";
        case DatasetId::kCocoToPascal:
            return "coco_to_pascal";
        case DatasetId::kSynthetic:
            return "synthetic";
    }
    return "?";
}

DatasetId dataset_from_name(const std::string& name) {
    for (DatasetId id : {DatasetId::kPascal5i, DatasetId::kCoco20i,
                         DatasetId::kCocoToPascal, DatasetId::kSynthetic}) {
        if (name == dataset_name(id)) return id;
    }
    throw Error(ErrorCode::ConfigError, "unknown dataset '" + name + "'");
}

FoldSpec fold_spec(DatasetId dataset, int fold) {
    if (fold < 0 || fold > 3) {
        throw Error(ErrorCode::UnknownFold,
                    "fold " + std::to_string(fold) + " not in 0..3");
    }
    const Table& table = table_for(dataset);
    FoldSpec spec;
    spec.dataset = dataset;
    spec.fold = fold;
    spec.test_classes = table[static_cast<std::size_t>(fold)];
    for (int g = 0; g < 4; ++g) {
        if (g == fold) continue;
        const auto& other = table[static_cast<std::size_t>(g)];
        spec.train_classes.insert(spec.train_classes.end(), other.begin(),
                                  other.end());
    }
    return spec;
}

FoldSpec synthetic_fold(const std::vector<std::string>& vocab, int fold) {
    if (fold < 0 || fold > 3) {
        throw Error(ErrorCode::UnknownFold,
                    "fold " + std::to_string(fold) + " not in 0..3");
    }
    const std::size_t hi = 2 * static_cast<std::size_t>(fold) + 1;
    if (hi >= vocab.size()) {
        throw Error(ErrorCode::UnknownFold,
                    "fold " + std::to_string(fold) + " needs at least " +
                        std::to_string(hi + 1) + " classes, vocabulary has " +
                        std::to_string(vocab.size()));
    }
    FoldSpec spec;
    spec.dataset = DatasetId::kSynthetic;
    spec.fold = fold;
    spec.test_classes = {vocab[hi - 1], vocab[hi]};
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        if (i == hi - 1 || i == hi) continue;
        spec.train_classes.push_back(vocab[i]);
    }
    return spec;
}

}  // namespace vrpseg
