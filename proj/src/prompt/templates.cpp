#include "templates.hpp"

namespace coldqs::prompt::detail {

const std::string_view kGeneralIntent = R"tmpl(# Task: identify the user's intention based on the conversation with the AI assistant and Generate 3 follow-up options for the user to click on:
- If the input contains errors or intention is unclear, infer 3 probable questions.
- If intention is clear but broad, narrow the scope by asking about specific details or next steps.
- If intention is clear and specific, broaden the scope by asking about complementary, alternative, or exploratory questions.

# Constraints
1. Each follow-up option must be concise (under 30 tokens) and unique.
2. When generating options, you should from the user's perspective.
3. Present the output in the following JSON structure:
{
"options": [
    "Follow-up option 1",
    "Follow-up option 2",
    "Follow-up option 3"
    ]
}
)tmpl";

const std::string_view kProductRecommendation = R"tmpl(# Task
Identify the user's intention based on the conversation with the AI Shopping assistant:

Unclear
Clear but broad
Clear and specific
Generate 3 follow-up options for the user to click on:

If the input contains errors or the intention is unclear, infer and generate probable user intentions, then phrase three as user-initiated questions or requests to the shopping assistant.
If the intention is clear but broad, help narrow the scope by generating three user-initiated questions that ask for specific details or next steps.
If the intention is clear and specific, help broaden the scope by generating three user-initiated questions about complementary, alternative, or exploratory topics.
# Constraints
Each follow-up option must be concise (under 30 tokens) and unique.
All follow-up options must be written in first person, as natural questions or statements that the user would click on or say to the shopping assistant.
Do not use sentences from the assistant's perspective. Only output the user's words.
For example:
"Can you recommend something popular?"
"Are there any deals on electronics today?"
"I'm looking for a birthday gift. Any suggestions?"
If the user's input is a broad product category (e.g., "flowers"), use contextual clues to infer relevant subcategories or usage scenarios, and phrase follow-ups accordingly (e.g., "Which flowers are best for gifting elderly people?")
Do not include multiple choices in a single option. Each option must be a single question or request.
If multiple product-related queries exist in the conversation history, only generate follow-ups for the most recent product query.
Avoid questions that compare non-similar products.
If a follow-up question involves budget, use a specific numerical amount instead of vague terms.

Important:
Always output follow-up options as if the user is talking or clicking, never as assistant suggestions.
If the intention is unclear, do not repeat or paraphrase the user's vague input; instead, infer possible intended scenarios and phrase each as a user-initiated question or request.
If a follow-up question involves budget, be mindful of reasonable price ranges for products. Use the currency specified by the user or their country, and prioritize any input restrictions or special requirements when displaying prices.

Present the output in the following JSON format:

Example input:
user query: Buy something
{
"options": [
    "Can you show me popular items right now?",
    "Can you recommend good daily necessities?",
    "I'm buying a gift for a friend. Any suggestions?"]
}
)tmpl";

const std::string_view kJudge = R"tmpl(# Task: Evaluate follow-up question quality for (Anonymous) e-commerce assistant
You are a professional e-commerce follow-up question quality evaluator, tasked with strictly assessing whether the three follow-up questions provided by the user meet (Anonymous)'s high-quality standards.

Evaluate each of the three follow-up questions against the following three rules. If any single follow-up question violates any one rule, it is considered a bad case.  

1. Answerability 
- The question must be a genuine product-related or platform QA inquiry or Common Sense Chat that a real user would ask within the (Anonymous) app.  
- Prohibited content includes AI/system-perspective counter-questions (e.g., "What would you like to know?"), privacy-related inquiries (e.g., "What kind of flowers does your girlfriend like?"), or questions outside the scope of common e-commerce knowledge (e.g., weather forecasts, medical advice).  

Compliant examples:  
- "Does this Bluetooth headset support active noise cancellation?"  
- "Is the inner pot of this rice cooker made of stainless steel or coated material?"  

Non-compliant examples:  
- "What type of product do you want to buy?"  
- "What color of flowers does your girlfriend like?"  
- "Can you tell me if it will rain tomorrow?"  

2.Factual Accuracy
- The content of the question must align with real-world fact and must not contain clearly fictional or impossible statements.  

Compliant examples:  
- "Which Type-C cables support fast charging?"  
- "Can you recommend an Android phone with a battery capacity above 5000mAh?"  

Non-compliant examples:  
- "Is there an iPhone 15 for 1 PHP?"  
- "Can I buy a flying electric scooter?"  
- "Are there wireless earbuds that don't require charging?" 
- "Does (Anonymous) sell time machines?"  

3. Information Gain
- Each follow-up question must deepen, refine, or clarify the original intent (e.g., by specifying brand, features, budget, etc.).  
- If a budget is mentioned, it must include a specific numeric value (e.g., "under 2,500 PHP"); vague terms such as "cheap" or "reasonable" are prohibited.  
- The question should be related to user intent but must not merely rephrase or repeat the original query without adding new information.  

Compliant examples:  
- Original: "I want to buy a router."  Follow-up: "Do you have any Xiaomi routers under 2,500 PHP that support Wi-Fi 6?"  
- Original: "Recommend an electric toothbrush."  Follow-up: "Are there any electric toothbrushes with pressure sensors under 2,000 PHP?"  
- Original: "How is this hair dryer?"  Follow-ups: "What is its wattage?", "Does it support cold/hot air switching?"  
Non-compliant examples:  
- "Can you recommend a router?" (no added information)  
- "Are there cheaper phones?" (vague budget)  
- "Is this headset good?" (lacks specific criteria)  
- "Recommend another electric toothbrush." (mere repetition of request)  

Output Requirements
- Output only a valid JSON object.  
- If all three follow-up questions fully comply, return {"score": 3,"reason":"reason for score", "Answerability":3,"Factual_Accuracy":3,"Information_Gain":3}.  
- If exactly one question violates any rule, overall score got 2; if two violate,  overall score got 1; if all three violate,  overall score got 0.  
- Do not include explanations, comments, or any additional text.
)tmpl";

}  // namespace coldqs::prompt::detail
