#pragma once

#include <string>

#include "flowtune/knowledge.hpp"

namespace flowtune {

// Knowledge bases persist as one self-describing JSON document (version "1")
// holding the offline config, the feature normalization bounds, and per
// cluster the surfaces (grids, node derivatives, per-point confidence
// statistics), maxima, and sampling regions. Serialization is canonical:
// identical bases produce identical bytes. docs/kb_format.md documents the
// layout field by field.
std::string kb_to_json(const KnowledgeBase& kb);
KnowledgeBase kb_from_json(const std::string& text);

void save_kb(const KnowledgeBase& kb, const std::string& path);
// expected_fingerprint, when nonempty, must match the stored one.
KnowledgeBase load_kb(const std::string& path, const std::string& expected_fingerprint = "");

} // namespace flowtune
