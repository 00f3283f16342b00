//! Just enough `multipart/form-data` to accept a CSV upload from an HTML
//! form or `curl -F file=@trip.csv`.

pub(crate) struct Upload<'a> {
    pub csv: &'a [u8],
    /// From a `ride_id` form field, else the uploaded file's stem.
    pub ride_id: Option<String>,
}

struct Part<'a> {
    name: Option<String>,
    filename: Option<String>,
    body: &'a [u8],
}

pub(crate) fn extract_upload<'a>(content_type: &str, body: &'a [u8]) -> Result<Upload<'a>, String> {
    let boundary = content_type
        .split(';')
        .map(str::trim)
        .find_map(|p| p.strip_prefix("boundary="))
        .map(|b| b.trim_matches('"'))
        .filter(|b| !b.is_empty())
        .ok_or("multipart body without a boundary")?;
    let parts = split_parts(body, boundary)?;

    let file = parts
        .iter()
        .find(|p| p.name.as_deref() == Some("file"))
        .or_else(|| parts.iter().find(|p| p.filename.is_some()))
        .or_else(|| parts.iter().find(|p| p.name.as_deref() != Some("ride_id")))
        .ok_or("multipart body has no file part")?;
    let field = parts
        .iter()
        .find(|p| p.name.as_deref() == Some("ride_id"))
        .map(|p| String::from_utf8_lossy(p.body).trim().to_owned());
    let stem = file.filename.as_deref().and_then(|f| {
        std::path::Path::new(f)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
    });
    Ok(Upload {
        csv: file.body,
        ride_id: field.or(stem),
    })
}

fn split_parts<'a>(body: &'a [u8], boundary: &str) -> Result<Vec<Part<'a>>, String> {
    let delim = format!("--{boundary}");
    let mut parts = Vec::new();
    let mut rest = match find(body, delim.as_bytes()) {
        Some(i) => &body[i + delim.len()..],
        None => return Err("multipart boundary not found".into()),
    };
    let next_delim = format!("\r\n--{boundary}");
    loop {
        if rest.starts_with(b"--") {
            break;
        }
        rest = rest.strip_prefix(b"\r\n").ok_or("malformed multipart delimiter")?;
        let end = find(rest, next_delim.as_bytes()).ok_or("unterminated multipart part")?;
        let raw = &rest[..end];
        rest = &rest[end + next_delim.len()..];

        let split = find(raw, b"\r\n\r\n").ok_or("multipart part without headers")?;
        let head = String::from_utf8_lossy(&raw[..split]);
        let mut part = Part {
            name: None,
            filename: None,
            body: &raw[split + 4..],
        };
        for line in head.lines() {
            let Some((k, v)) = line.split_once(':') else { continue };
            if k.trim().eq_ignore_ascii_case("content-disposition") {
                for attr in v.split(';').map(str::trim) {
                    if let Some(n) = attr.strip_prefix("name=") {
                        part.name = Some(n.trim_matches('"').to_owned());
                    } else if let Some(f) = attr.strip_prefix("filename=") {
                        part.filename = Some(f.trim_matches('"').to_owned());
                    }
                }
            }
        }
        parts.push(part);
    }
    Ok(parts)
}

fn find(hay: &[u8], needle: &[u8]) -> Option<usize> {
    hay.windows(needle.len()).position(|w| w == needle)
}
