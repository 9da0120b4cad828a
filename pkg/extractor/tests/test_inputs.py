import pytest
from PIL import Image

from embed_extract.inputs import crop_object, text_input_for
from embed_extract.manifest import ManifestObject


def obj(category, text=None, cells=None):
    return ManifestObject("o", (0.0, 0.0, 10.0, 10.0), category, text, cells)


class TestTextInputRules:
    """The category -> model-input table, exhaustive over all seven."""

    def test_body_is_identity(self):
        assert text_input_for(obj("body", "Artículo 1.")) == "Artículo 1."

    def test_title_is_identity(self):
        assert text_input_for(obj("title", "Disposición")) == "Disposición"

    def test_summary_is_identity(self):
        assert text_input_for(obj("summary", "Resumen")) == "Resumen"

    def test_identifier_is_identity(self):
        assert text_input_for(obj("identifier", "BOE-A-2")) == "BOE-A-2"

    def test_image_is_the_string_zero(self):
        assert text_input_for(obj("image")) == "0"

    def test_link_passes_url(self):
        assert text_input_for(obj("link", "https://example.test/a")) == "https://example.test/a"

    def test_table_flattens_row_major_single_spaces(self):
        assert text_input_for(obj("table", cells=(("a", "b"), ("c",)))) == "a b c"

    def test_empty_table(self):
        assert text_input_for(obj("table", cells=())) == ""

    def test_unknown_category_rejected(self):
        with pytest.raises(ValueError):
            text_input_for(obj("footnote", "x"))


class TestCrop:
    def test_full_page_bbox_is_whole_raster(self):
        raster = Image.new("RGB", (100, 150), "white")
        crop, degenerate = crop_object(raster, (0.0, 0.0, 50.0, 75.0), 50.0, 75.0)
        assert crop.size == (100, 150) and not degenerate

    def test_points_scale_by_raster_density(self):
        raster = Image.new("RGB", (200, 300), "white")
        crop, _ = crop_object(raster, (10.0, 20.0, 30.0, 50.0), 100.0, 150.0)
        assert crop.size == (40, 60)  # 2x pixels per point

    def test_degenerate_crop_padded_and_flagged(self):
        raster = Image.new("RGB", (100, 150), "white")
        crop, degenerate = crop_object(raster, (10.0, 10.0, 10.1, 10.1), 100.0, 150.0)
        assert degenerate
        assert crop.size == (1, 1)
