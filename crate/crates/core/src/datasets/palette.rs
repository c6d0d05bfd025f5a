use crate::error::{Error, Result};

/// Class label (0-9) to RGB color.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorPalette {
    pub colors: Vec<[f32; 3]>,
}

impl Default for ColorPalette {
    /// Fully saturated hues; digit 5 is yellow and digit 8 orange.
    fn default() -> Self {
        Self {
            colors: vec![
                [1.0, 0.0, 0.0], // 0 red
                [0.0, 1.0, 0.0], // 1 green
                [0.0, 0.0, 1.0], // 2 blue
                [0.0, 1.0, 1.0], // 3 cyan
                [1.0, 0.0, 1.0], // 4 magenta
                [1.0, 1.0, 0.0], // 5 yellow
                [0.0, 0.5, 1.0], // 6 azure
                [0.0, 1.0, 0.5], // 7 spring green
                [1.0, 0.5, 0.0], // 8 orange
                [0.5, 0.0, 1.0], // 9 violet
            ],
        }
    }
}

impl ColorPalette {
    pub fn new(colors: Vec<[f32; 3]>) -> Result<Self> {
        let p = Self { colors };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.colors.len() != 10 {
            return Err(Error::invalid(format!("palette needs 10 colors, has {}", self.colors.len())));
        }
        for c in &self.colors {
            if c.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::invalid(format!("color {c:?} outside [0,1]^3")));
            }
        }
        for i in 0..self.colors.len() {
            for j in i + 1..self.colors.len() {
                if self.colors[i] == self.colors[j] {
                    return Err(Error::invalid(format!("palette entries {i} and {j} coincide")));
                }
            }
        }
        Ok(())
    }

    pub fn color(&self, class: u32) -> Result<[f32; 3]> {
        self.colors
            .get(class as usize)
            .copied()
            .ok_or_else(|| Error::invalid(format!("no palette entry for class {class}")))
    }

    pub fn feature_name(class: usize) -> String {
        format!("color_{class}")
    }

    /// Plain-text form used in cache manifests: `r,g,b;r,g,b;...`.
    pub fn to_record(&self) -> String {
        self.colors
            .iter()
            .map(|c| format!("{},{},{}", c[0], c[1], c[2]))
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn from_record(s: &str) -> Result<Self> {
        let bad = || Error::Format {
            what: "palette record",
            detail: s.to_string(),
        };
        let colors = s
            .split(';')
            .map(|c| {
                let v: Vec<f32> = c
                    .split(',')
                    .map(|x| x.trim().parse::<f32>().map_err(|_| bad()))
                    .collect::<Result<_>>()?;
                <[f32; 3]>::try_from(v).map_err(|_| bad())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(colors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_palette_is_valid_and_distinct() {
        let p = ColorPalette::default();
        p.validate().unwrap();
        assert_ne!(p.color(5).unwrap(), p.color(3).unwrap());
        assert_eq!(p.color(5).unwrap(), [1.0, 1.0, 0.0]);
        assert!(p.color(10).is_err());
    }

    #[test]
    fn duplicate_colors_rejected() {
        let mut colors = ColorPalette::default().colors;
        colors[9] = colors[0];
        assert!(ColorPalette::new(colors).is_err());
    }

    #[test]
    fn record_round_trip() {
        let p = ColorPalette::default();
        assert_eq!(ColorPalette::from_record(&p.to_record()).unwrap(), p);
    }
}
