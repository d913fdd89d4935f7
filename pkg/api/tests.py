import json
from decimal import Decimal
from pathlib import Path

from django.core.files.uploadedfile import SimpleUploadedFile
from django.test import Client, SimpleTestCase
from django.urls import reverse

from core import config
from core.traces import MAGIC, RECORD

DATA = Path(__file__).resolve().parent.parent / 'core' / 'tests' / 'data'


class PresetApiTest(SimpleTestCase):
    def setUp(self):
        self.client = Client()

    def test_list(self):
        response = self.client.get(reverse('api:preset_list'))
        self.assertEqual(response.status_code, 200)
        names = [preset['name'] for preset in response.json()['presets']]
        self.assertEqual(names, ['cacti-default', 'xeon-e5503', 'xeon-e5507', 'xeon-foster'])

    def test_detail(self):
        response = self.client.get(reverse('api:preset_detail', args=['xeon-foster']))
        self.assertEqual(response.status_code, 200)
        self.assertEqual(response.json()['processor']['technology_nm'], 180)

    def test_unknown_preset(self):
        response = self.client.get(reverse('api:preset_detail', args=['pentium']))
        self.assertEqual(response.status_code, 400)
        self.assertEqual(response.json()['error'], 'unknown-preset')

    def test_list_is_read_only(self):
        response = self.client.post(reverse('api:preset_list'))
        self.assertEqual(response.status_code, 405)


class EvaluateApiTest(SimpleTestCase):
    def setUp(self):
        self.client = Client()
        self.sheet = json.loads((DATA / 'worked_example.json').read_text())

    def post(self, body):
        return self.client.post(reverse('api:evaluate'), data=json.dumps(body), content_type='application/json')

    def test_evaluate_counts(self):
        # 1. Post the worked example
        response = self.post({'counts': self.sheet['counts'], 'params': self.sheet['params'], 'id': 'worked'})
        self.assertEqual(response.status_code, 200)

        # 2. Check the report
        report = response.json()
        self.assertEqual(report['id'], 'worked')
        expected = Decimal(self.sheet['expected']['energy']['total'])
        self.assertAlmostEqual(report['energy']['total'], float(expected), delta=float(expected) * 1e-12)
        self.assertEqual(report['derived']['cpi'], 1.25)

    def test_params_layer_over_preset(self):
        response = self.post({'counts': {'ic_reads': 1000, 'ic_read_misses': 10, 'total_cycles': 3000,
                                         'instruction_count': 1000},
                              'preset': 'xeon-foster', 'params': {'penalties': {'ic_read_miss': 20}}})
        self.assertEqual(response.status_code, 200)
        report = response.json()
        self.assertEqual(report['params']['document']['penalties']['ic_read_miss'], 20)
        self.assertAlmostEqual(report['energy']['ic']['miss_penalty'], 4e-8 * 20 * 10, delta=1e-18)

    def test_bad_requests(self):
        self.assertEqual(self.client.post(reverse('api:evaluate'), data='{nope',
                                          content_type='application/json').status_code, 400)
        self.assertEqual(self.client.post(reverse('api:evaluate'), data=b'{"counts": "\xff"}',
                                          content_type='application/json').status_code, 400)
        self.assertEqual(self.post({'preset': 'xeon-foster'}).status_code, 400)
        self.assertEqual(self.post({'counts': {}}).status_code, 400)

    def test_model_errors(self):
        response = self.post({'counts': {'ic_reads': 1, 'ic_read_misses': 5}, 'preset': 'xeon-foster'})
        self.assertEqual(response.status_code, 400)
        self.assertEqual(response.json()['error'], 'invalid-parameter')
        self.assertEqual(response.json()['field'], 'ic_read_misses')

        response = self.post({'counts': {'total_cycles': 10}, 'preset': 'xeon-foster'})
        self.assertEqual(response.json()['error'], 'missing-cpi')


class SimulateApiTest(SimpleTestCase):
    def setUp(self):
        self.client = Client()

    def upload(self, name, content, **fields):
        return self.client.post(reverse('api:simulate'),
                                {'file': SimpleUploadedFile(name, content), **fields})

    def test_text_trace(self):
        content = (DATA / 'golden_sequential.trc').read_bytes()
        response = self.upload('golden.trc', content, preset='xeon-foster')
        self.assertEqual(response.status_code, 200)
        report = response.json()
        self.assertEqual(report['id'], 'golden.trc')
        self.assertEqual(report['counts']['total_cycles'], 33670)
        self.assertEqual(report['caches']['l2']['read_misses'], 297)

    def test_binary_trace_with_per_core(self):
        body = b''.join(RECORD.pack(kind, core, b'\x00' * 6, address)
                        for kind, core, address in ((0, 0, 0x400000), (1, 1, 0x40), (2, 0, 0x80), (0, 1, 0x400000)))
        response = self.upload('tiny.ctrc', MAGIC + body, preset='xeon-e5503', per_core='1', id='tiny')
        self.assertEqual(response.status_code, 200)
        report = response.json()
        self.assertEqual(report['records'], 4)
        self.assertEqual(len(report['per_core']), 2)
        self.assertEqual(report['counts']['instruction_count'], 2)

    def test_errors(self):
        self.assertEqual(self.client.post(reverse('api:simulate'), {'preset': 'xeon-foster'}).status_code, 400)
        self.assertEqual(self.upload('t.trc', b'I 0x0\n').status_code, 400)

        response = self.upload('bad.trc', b'I 0x0\nZ 0x0\n', preset='xeon-foster')
        self.assertEqual(response.status_code, 422)
        self.assertEqual(response.json()['error'], 'trace-format')
        self.assertEqual(response.json()['line'], 2)

        response = self.upload('cores.trc', b'I 0x0 5\n', preset='xeon-foster')
        self.assertEqual(response.status_code, 422)
        self.assertEqual(response.json()['error'], 'trace')

    def test_upload_must_be_utf8(self):
        response = self.upload('latin1.trc', b'I 0x0\nR 0x10 \xb2\n', preset='xeon-foster')
        self.assertEqual(response.status_code, 400)
        self.assertEqual(response['Content-Type'], 'application/json')
        self.assertEqual(response.json()['error'], 'Trace file must be UTF-8 text')

    def test_non_ascii_core_is_a_trace_format_error(self):
        response = self.upload('digits.trc', 'I 0x0 \u0663\n'.encode(), preset='xeon-foster')
        self.assertEqual(response.status_code, 422)
        self.assertEqual(response.json()['error'], 'trace-format')
        self.assertEqual(response.json()['token'], '\u0663')

    def test_report_parameters_keep_their_digits(self):
        content = (DATA / 'golden_sequential.trc').read_bytes()
        response = self.upload('golden.trc', content, preset='xeon-e5507')
        document = json.loads(response.content, parse_float=Decimal)['params']['document']
        self.assertEqual(config.load(document), config.load('xeon-e5507'))
