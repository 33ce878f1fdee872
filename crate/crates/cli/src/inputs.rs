use std::fs;
use std::path::Path;

use rieszlab::io::{
    configuration_from_text, configuration_to_text, density_from_text, density_to_text, from_toml,
    pixel_set_from_text, pixel_set_to_text, to_toml,
};
use rieszlab::{Configuration, DensityField, PixelSet};

use crate::{io_err, CliError, Result};

/// Anything the single-shot verbs accept as input.
#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Configuration(Configuration),
    PixelSet(PixelSet),
    Density(DensityField),
}

fn is_toml(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "toml")
}

/// Parses text in either format. TOML records are told apart by their keys,
/// the line format by its header word.
pub fn parse(text: &str, toml_format: bool) -> Result<Input> {
    if toml_format {
        let table: toml::Table = toml::from_str(text).map_err(|e| CliError::Input(e.to_string()))?;
        return if table.contains_key("points") {
            Ok(Input::Configuration(from_toml(text)?))
        } else if table.contains_key("values") {
            Ok(Input::Density(from_toml(text)?))
        } else if table.contains_key("cells") {
            Ok(Input::PixelSet(from_toml(text)?))
        } else {
            Err(CliError::Input("TOML input is not a configuration, pixel set or density".into()))
        };
    }
    let header = text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('#'));
    match header {
        Some("configuration") => Ok(Input::Configuration(configuration_from_text(text)?)),
        Some("pixelset") => Ok(Input::PixelSet(pixel_set_from_text(text)?)),
        Some("density") => Ok(Input::Density(density_from_text(text)?)),
        other => Err(CliError::Input(format!("unrecognized header {other:?}"))),
    }
}

pub fn read(path: &Path) -> Result<Input> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse(&text, is_toml(path))
}

pub fn render(input: &Input, toml_format: bool) -> Result<String> {
    Ok(match (input, toml_format) {
        (Input::Configuration(c), true) => to_toml(c)?,
        (Input::PixelSet(s), true) => to_toml(s)?,
        (Input::Density(f), true) => to_toml(f)?,
        (Input::Configuration(c), false) => configuration_to_text(c),
        (Input::PixelSet(s), false) => pixel_set_to_text(s),
        (Input::Density(f), false) => density_to_text(f),
    })
}

/// Writes in the format implied by the file extension.
pub fn write(path: &Path, input: &Input) -> Result<()> {
    let text = render(input, is_toml(path))?;
    fs::write(path, text).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rieszlab::Dim;

    #[test]
    fn both_formats_are_detected() {
        let c = Configuration::from_coords(Dim::TWO, 0.1, &[vec![0.0, 0.0], vec![0.5, 0.1]]).unwrap();
        let s = PixelSet::new(Dim::TWO, 0.25, vec![[0, 0, 0], [1, 0, 0]]).unwrap();
        let f = DensityField::new(Dim::TWO, 0.25, vec![([0, 0, 0], 0.5)]).unwrap();
        for input in [Input::Configuration(c), Input::PixelSet(s), Input::Density(f)] {
            for toml_format in [false, true] {
                let text = render(&input, toml_format).unwrap();
                assert_eq!(parse(&text, toml_format).unwrap(), input);
            }
        }
    }

    #[test]
    fn unknown_header_is_reported() {
        assert!(matches!(parse("points\n1 2\n", false), Err(CliError::Input(_))));
    }
}
