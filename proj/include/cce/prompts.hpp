#pragma once

#include <string>
#include <vector>

namespace cce {

// Renders ["a", "b"] as [a, b]; used by every list-bearing prompt.
std::string bracket_list(const std::vector<std::string>& items);

// Instruction sent to a language-model classifier along with the image;
// the valid label set is interpolated into the text.
std::string classification_prompt(const std::vector<std::string>& labels);

// Single-step edit-selection instruction: lists the scene's objects plus the
// remaining addable/removable concepts and asks for one bracketed triple,
// e.g. ["replace", "couch", "bed"].
std::string selector_step_prompt(const std::vector<std::string>& scene_objects,
                                 const std::vector<std::string>& add_list,
                                 const std::vector<std::string>& remove_list);

// Asks which existing object the newly added one should appear in front of.
std::string insert_anchor_prompt(const std::string& object);

// Asks which object is revealed behind the removed one.
std::string delete_backdrop_prompt(const std::string& object);

// Positive prompts handed to the inpainter, one shape per edit kind so the
// intended reconstruction is unambiguous from the text alone.
std::string inpaint_prompt_insert(const std::string& object, const std::string& anchor);
std::string inpaint_prompt_delete(const std::string& backdrop);
std::string inpaint_prompt_substitute(const std::string& replacement);

// Shipped default; callers may override through configuration.
std::string default_negative_prompt();

} // namespace cce
