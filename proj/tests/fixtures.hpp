#pragma once

// Small shared fixtures for the unit tests.

#include <string>
#include <vector>

#include "itemval/core.hpp"
#include "itemval/embedding.hpp"

namespace testutil {

// Two constructs, two items each.
inline itemval::Questionnaire tiny_questionnaire() {
    itemval::Questionnaire q;
    q.name = "tiny";
    q.constructs = {{"a", "Construct A"}, {"b", "Construct B"}};
    q.items = {{"a1", "first a item", "a", "en"},
               {"a2", "second a item", "a", "en"},
               {"b1", "first b item", "b", "en"},
               {"b2", "second b item", "b", "en"}};
    q.validate();
    return q;
}

// K constructs with n items each, ids c<k> and c<k>_i<j>.
inline itemval::Questionnaire grid_questionnaire(std::size_t k, std::size_t n) {
    itemval::Questionnaire q;
    q.name = "grid";
    for (std::size_t c = 0; c < k; ++c)
        q.constructs.push_back({"c" + std::to_string(c + 1), "Construct " + std::to_string(c + 1)});
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t j = 0; j < n; ++j) {
            const std::string cid = q.constructs[c].id;
            q.items.push_back({cid + "_i" + std::to_string(j + 1),
                               "item " + std::to_string(j + 1) + " of " + cid, cid, "en"});
        }
    q.validate();
    return q;
}

// The hand-worked 2D fixture: a-items point along x, b-items along y.
// For a1: mean similarity to own construct (a2, excluding self) is 1,
// to construct b is 0, so softmax gives (e/(e+1), 1/(e+1)).
inline itemval::EmbeddingMatrix axis_embeddings() {
    itemval::EmbeddingMatrix m;
    m.append_row("a1", {1.0f, 0.0f});
    m.append_row("a2", {1.0f, 0.0f});
    m.append_row("b1", {0.0f, 1.0f});
    m.append_row("b2", {0.0f, 1.0f});
    return m;
}

} // namespace testutil
