/** Rating rubric shown to evaluators, embedded verbatim from the annotation guidelines. */

export const GENERAL_GUIDELINES: readonly string[] = [
    "MUST: Be objective while rating the responses.",
    "MUST: Strictly follow the rubrics for Accuracy and Fluency evaluation.",
    "Score each criterion on a scale from 1 to 3, where 1 is the lowest and 3 is the highest.",
    "Ignore formatting, and any additional explanatory text generated by the language model. Only focus on meaning and context.",
    "If the model fails to generate a response, assign a score of 1 for both Accuracy and Fluency.",
];

export interface RubricLevel {
    score: 1 | 2 | 3;
    title: string;
    points: readonly string[];
}

export const ACCURACY_RUBRIC: readonly RubricLevel[] = [
    {
        score: 1,
        title: "Low Accuracy",
        points: [
            "Significant deviations from the original meaning.",
            "Key information is missing, altered, or repeated redundantly.",
            "Code-switched terms are incorrect or inappropriate.",
            "Introduces new information not present in the original sentence.",
            "Key details are altered or repeated redundantly.",
        ],
    },
    {
        score: 2,
        title: "Moderate Accuracy",
        points: [
            "Minor deviations from the original meaning.",
            "Most key information is present but may have slight errors.",
            "Most code-switched terms are appropriate but with minor mistakes.",
        ],
    },
    {
        score: 3,
        title: "High Accuracy",
        points: [
            "Preserves the original meaning fully.",
            "All key information is present and correct.",
            "Code-switched terms are accurate and appropriately used.",
        ],
    },
];

export const FLUENCY_RUBRIC: readonly RubricLevel[] = [
    {
        score: 1,
        title: "Low Fluency",
        points: [
            "The sentence is difficult to understand or awkward.",
            "Poor grammar or syntax in either language.",
            "Code-switching disrupts the flow of the sentence.",
        ],
    },
    {
        score: 2,
        title: "Moderate Fluency",
        points: [
            "The sentence is understandable but may have awkward or unnatural phrasing.",
            "Acceptable grammar and syntax in both languages.",
            "Code-switching is somewhat smooth but not perfectly integrated.",
        ],
    },
    {
        score: 3,
        title: "High Fluency",
        points: [
            "The sentence is natural and easy to understand.",
            "Good grammar and syntax in both languages.",
            "Code-switching is smooth and seamless, enhancing the sentence flow.",
        ],
    },
];
