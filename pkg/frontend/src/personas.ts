/** Preference/air-quality personas; each pins a value of the blend weight. */

export interface PersonaPreset {
  name: string;
  alpha: number;
  description: string;
}

export const PERSONAS: readonly PersonaPreset[] = [
  {
    name: "User 1 — healthy, preference-led",
    alpha: 1.0,
    description: "Personal taste only; air quality ignored.",
  },
  {
    name: "User 2 — elderly, AQI-cautious",
    alpha: 0.3,
    description: "Air quality weighs strongly against preference.",
  },
  {
    name: "Balanced",
    alpha: 0.5,
    description: "Even blend of preference and air quality.",
  },
  {
    name: "AQI only",
    alpha: 0.0,
    description: "Cleanest air wins regardless of taste.",
  },
];

export function personaByName(name: string): PersonaPreset | undefined {
  return PERSONAS.find((p) => p.name === name);
}
