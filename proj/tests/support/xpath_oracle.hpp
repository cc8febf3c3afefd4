#pragma once

// Exhaustive-walk XPath oracle. It never follows axes: every node of the
// tree is enumerated and each step is decided from the definitional
// relation between a context node and a candidate (parent links only).
// It shares nothing with the production evaluator except the AST.

#include <random>
#include <string>
#include <vector>

#include "clipportal/html_tree.hpp"
#include "clipportal/xpath.hpp"

namespace clipportal::oracle {

std::vector<const html::Node*> all_nodes_in_document_order(const html::Node& root);

xpath::NodeSet oracle_evaluate(const xpath::XPathExpr& expr, const html::Node& context);

/// Random document with at most `max_nodes` element+text nodes under body.
std::unique_ptr<html::Node> random_document(std::mt19937& rng, int max_nodes);

/// Random expression from the v1 grammar, biased towards the vocabulary of random_document().
xpath::XPathExpr random_expression(std::mt19937& rng);

}  // namespace clipportal::oracle
